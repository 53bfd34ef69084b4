#include "ostop/problem_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace ostop {

namespace {

using nlohmann::json;

ExtReal parse_endpoint(const json& j, const std::string& where) {
    if (j.is_number()) return ExtReal(j.get<double>());
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return ExtReal::pos_inf();
        if (s == "-inf") return ExtReal::neg_inf();
        throw ParseError(where + ": expected a number, \"inf\", or \"-inf\", got \"" + s + "\"");
    }
    throw ParseError(where + ": expected a number or an infinity string");
}

std::vector<double> parse_coeff_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
    std::vector<double> c;
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(where + ": expected an array of numbers");
        c.push_back(v.get<double>());
    }
    return c;
}

double get_num(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number())
        throw ParseError(where + ": missing numeric field '" + key + "'");
    return j[key].get<double>();
}

Poly poly_about(double x0, std::vector<double> c) {
    Poly p;
    p.x0 = x0;
    p.c = std::move(c);
    p.trim();
    return p;
}

Form parse_form(const json& j, const std::string& where) {
    if (j.is_number()) return Poly::constant(j.get<double>());
    if (!j.is_object()) throw ParseError(where + ": form must be a number or an object");
    if (!j.contains("type") || !j["type"].is_string())
        throw ParseError(where + ": form needs a string 'type'");
    const std::string type = j["type"].get<std::string>();

    if (type == "constant") {
        if (!j.contains("value") || !j["value"].is_number())
            throw ParseError(where + ": constant form needs a numeric 'value'");
        return Poly::constant(j["value"].get<double>());
    }
    if (type == "poly") {
        const double x0 = j.contains("x0") ? get_num(j, "x0", where) : 0.0;
        if (!j.contains("coeffs")) throw ParseError(where + ": poly form needs 'coeffs'");
        return poly_about(x0, parse_coeff_array(j["coeffs"], where + ".coeffs"));
    }
    if (type == "exp") {
        // c * e^{a (x - x0)} + tail(x), tail about the same x0
        ExpPoly e;
        e.x0 = j.contains("x0") ? get_num(j, "x0", where) : 0.0;
        e.a = get_num(j, "a", where);
        e.c = get_num(j, "c", where);
        if (j.contains("tail")) e.tail = poly_about(e.x0, parse_coeff_array(j["tail"], where + ".tail"));
        return e;
    }
    if (type == "power") {
        // c * u^p + log_poly(u) ln u + poly(u),  u = dir (x - x0) > 0
        PowerLog w;
        w.x0 = j.contains("x0") ? get_num(j, "x0", where) : 0.0;
        if (!j.contains("dir") || !j["dir"].is_number_integer())
            throw ParseError(where + ": power form needs integer 'dir' (+1 or -1)");
        w.dir = j["dir"].get<int>();
        if (w.dir != 1 && w.dir != -1) throw ParseError(where + ": 'dir' must be +1 or -1");
        w.cpow = j.contains("c") ? get_num(j, "c", where) : 0.0;
        w.p = j.contains("p") ? get_num(j, "p", where) : 0.0;
        if (j.contains("log_poly")) w.plog = poly_about(0.0, parse_coeff_array(j["log_poly"], where + ".log_poly"));
        if (j.contains("poly")) w.q = poly_about(0.0, parse_coeff_array(j["poly"], where + ".poly"));
        return w;
    }
    if (type == "erf") {
        // erf_poly(u) erf(u) + gauss_poly(u) e^{-u^2} + poly(u),  u = a (x - x0)
        GaussErf g;
        g.x0 = j.contains("x0") ? get_num(j, "x0", where) : 0.0;
        g.a = get_num(j, "a", where);
        if (j.contains("erf_poly")) g.pe = poly_about(0.0, parse_coeff_array(j["erf_poly"], where + ".erf_poly"));
        if (j.contains("gauss_poly")) g.pg = poly_about(0.0, parse_coeff_array(j["gauss_poly"], where + ".gauss_poly"));
        if (j.contains("poly")) g.pr = poly_about(0.0, parse_coeff_array(j["poly"], where + ".poly"));
        return g;
    }
    throw ParseError(where + ": unknown form type '" + type +
                     "' (expected constant, poly, exp, power, or erf)");
}

PiecewiseFunction parse_coefficient(const json& j, const Interval& J, const std::string& name) {
    if (j.is_number()) return PiecewiseFunction::constant(J, j.get<double>());
    if (j.is_object()) {
        // Single form covering the whole state interval.
        std::vector<Segment> one{{J.lo, J.hi, parse_form(j, name)}};
        try {
            return PiecewiseFunction(J, std::move(one));
        } catch (const std::exception& e) {
            throw ParseError(name + ": " + e.what());
        }
    }
    if (!j.is_array())
        throw ParseError(name + ": expected a number (constant), a form object, or an array "
                         "of segments");
    std::vector<Segment> segs;
    size_t idx = 0;
    for (const auto& js : j) {
        std::ostringstream wh;
        wh << name << " segment " << idx;
        if (!js.is_object()) throw ParseError(wh.str() + ": expected an object");
        if (!js.contains("from")) throw ParseError(wh.str() + ": missing 'from'");
        if (!js.contains("to")) throw ParseError(wh.str() + ": missing 'to'");
        Segment s;
        s.lo = parse_endpoint(js["from"], wh.str() + ".from");
        s.hi = parse_endpoint(js["to"], wh.str() + ".to");
        if (!js.contains("form")) throw ParseError(wh.str() + ": missing 'form'");
        s.form = parse_form(js["form"], wh.str() + ".form");
        segs.push_back(std::move(s));
        ++idx;
    }
    try {
        return PiecewiseFunction(J, std::move(segs));
    } catch (const std::exception& e) {
        throw ParseError(name + ": " + e.what());
    }
}

} // namespace

Problem parse_problem_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("top level must be an object");
    if (!j.contains("state_interval") || !j["state_interval"].is_array() ||
        j["state_interval"].size() != 2)
        throw ParseError("'state_interval' must be a two-element array");

    Problem pr;
    pr.J.lo = parse_endpoint(j["state_interval"][0], "state_interval[0]");
    pr.J.hi = parse_endpoint(j["state_interval"][1], "state_interval[1]");
    if (!(pr.J.lo < pr.J.hi)) throw ParseError("state_interval is empty");

    if (j.contains("lambda")) {
        if (!j["lambda"].is_number()) throw ParseError("'lambda' must be a number");
        pr.lambda = j["lambda"].get<double>();
    }
    if (!j.contains("sigma")) throw ParseError("missing 'sigma'");
    if (!j.contains("f")) throw ParseError("missing 'f'");
    pr.b = j.contains("b") ? parse_coefficient(j["b"], pr.J, "b")
                           : PiecewiseFunction::constant(pr.J, 0.0);
    pr.sigma = parse_coefficient(j["sigma"], pr.J, "sigma");
    pr.f = parse_coefficient(j["f"], pr.J, "f");
    return pr;
}

Problem load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open problem file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem_json(ss.str());
}

} // namespace ostop
