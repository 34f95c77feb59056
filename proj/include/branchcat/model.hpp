#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "branchcat/coefficients.hpp"
#include "branchcat/fragmentation.hpp"
#include "branchcat/jump_measure.hpp"

namespace branchcat {

// Model of the positive process: drift g, squared diffusion sigma2, positive
// jumps at rate p(x) with size measure pi, catastrophes at rate r(x) scaling
// the state by Theta ~ kappa.
struct ModelSpec {
    CoefficientFn g, sigma2, p, r;
    JumpMeasure pi;
    FragmentationKernel kappa = FragmentationKernel::atom(1.0);

    bool operator==(const ModelSpec& o) const = default;
};

inline ModelSpec build_model(CoefficientFn g, CoefficientFn sigma2, CoefficientFn p,
                             CoefficientFn r, JumpMeasure pi, FragmentationKernel kappa) {
    ModelSpec m;
    m.g = std::move(g);
    m.sigma2 = std::move(sigma2);
    m.p = std::move(p);
    m.r = std::move(r);
    m.pi = std::move(pi);
    m.kappa = std::move(kappa);
    return m;
}

// ---- family grammar ----
//
//   coefficient := zero | linear(c) | power(c,beta) | affine(c0,c1)
//                | logistic(c,k) | table((x,y),(x,y),...)
//   kernel      := atom(t) | discrete((t,w),...) | uniform | beta(a,b)
//   jumps       := zero | atoms((z,w),...) | exponential(mass,rate)
//                | trpower(mass,expo,zmin,zmax|inf)
//
// serialize() emits shortest-round-trip numerals, so parse(serialize(m)) == m
// holds exactly, parameter for parameter.

namespace detail {

inline void split_head(const std::string& s, std::string& name, std::string& args) {
    const auto lp = s.find('(');
    if (lp == std::string::npos) {
        name = s;
        args.clear();
        return;
    }
    if (s.back() != ')')
        throw std::invalid_argument("malformed family spec '" + s + "': missing ')'");
    name = s.substr(0, lp);
    args = s.substr(lp + 1, s.size() - lp - 2);
}

inline std::vector<std::string> split_top(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char ch : s) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    if (depth != 0) throw std::invalid_argument("unbalanced parentheses in '" + s + "'");
    return out;
}

inline std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline std::vector<std::pair<double, double>> parse_pairs(const std::string& args,
                                                          const std::string& what) {
    std::vector<std::pair<double, double>> out;
    for (const auto& tok : split_top(args)) {
        const std::string t = strip(tok);
        if (t.size() < 2 || t.front() != '(' || t.back() != ')')
            throw std::invalid_argument(what + ": expected (a,b) pair, got '" + t + "'");
        const auto ab = split_top(t.substr(1, t.size() - 2));
        if (ab.size() != 2)
            throw std::invalid_argument(what + ": expected exactly two entries in '" + t + "'");
        out.emplace_back(parse_double(strip(ab[0])), parse_double(strip(ab[1])));
    }
    if (out.empty()) throw std::invalid_argument(what + ": empty pair list");
    return out;
}

inline std::vector<double> parse_nums(const std::string& args, std::size_t want,
                                      const std::string& what) {
    const auto toks = split_top(args);
    if (toks.size() != want)
        throw std::invalid_argument(what + ": expected " + std::to_string(want) +
                                    " parameter(s), got " + std::to_string(toks.size()));
    std::vector<double> out;
    for (const auto& t : toks) out.push_back(parse_double(strip(t)));
    return out;
}

}  // namespace detail

inline CoefficientFn parse_coefficient(const std::string& spec) {
    std::string name, args;
    detail::split_head(detail::strip(spec), name, args);
    if (name == "zero") return CoefficientFn::zero();
    if (name == "linear") return CoefficientFn::linear(detail::parse_nums(args, 1, "linear")[0]);
    if (name == "power") {
        const auto v = detail::parse_nums(args, 2, "power");
        return CoefficientFn::power(v[0], v[1]);
    }
    if (name == "affine") {
        const auto v = detail::parse_nums(args, 2, "affine");
        return CoefficientFn::affine(v[0], v[1]);
    }
    if (name == "logistic") {
        const auto v = detail::parse_nums(args, 2, "logistic");
        return CoefficientFn::logistic(v[0], v[1]);
    }
    if (name == "table") {
        const auto pts = detail::parse_pairs(args, "table");
        std::vector<double> xs, ys;
        for (const auto& [x, y] : pts) {
            xs.push_back(x);
            ys.push_back(y);
        }
        return CoefficientFn::table(std::move(xs), std::move(ys));
    }
    throw std::invalid_argument("unknown coefficient family '" + name + "'");
}

inline FragmentationKernel parse_kernel(const std::string& spec) {
    std::string name, args;
    detail::split_head(detail::strip(spec), name, args);
    if (name == "atom") return FragmentationKernel::atom(detail::parse_nums(args, 1, "atom")[0]);
    if (name == "discrete") return FragmentationKernel::discrete(detail::parse_pairs(args, "discrete"));
    if (name == "uniform") return FragmentationKernel::uniform();
    if (name == "beta") {
        const auto v = detail::parse_nums(args, 2, "beta");
        return FragmentationKernel::beta(v[0], v[1]);
    }
    throw std::invalid_argument("unknown kernel family '" + name + "'");
}

inline JumpMeasure parse_jump(const std::string& spec) {
    std::string name, args;
    detail::split_head(detail::strip(spec), name, args);
    if (name == "zero") return JumpMeasure::zero();
    if (name == "atoms") return JumpMeasure::atoms(detail::parse_pairs(args, "atoms"));
    if (name == "exponential") {
        const auto v = detail::parse_nums(args, 2, "exponential");
        return JumpMeasure::exponential(v[0], v[1]);
    }
    if (name == "trpower") {
        const auto toks = detail::split_top(args);
        if (toks.size() != 4)
            throw std::invalid_argument("trpower: expected 4 parameters");
        const double zmax = detail::strip(toks[3]) == "inf"
                                ? std::numeric_limits<double>::infinity()
                                : parse_double(detail::strip(toks[3]));
        return JumpMeasure::trpower(parse_double(detail::strip(toks[0])),
                                    parse_double(detail::strip(toks[1])),
                                    parse_double(detail::strip(toks[2])), zmax);
    }
    throw std::invalid_argument("unknown jump family '" + name + "'");
}

inline std::string serialize_model(const ModelSpec& m) {
    std::string s;
    s += "g = " + m.g.to_string() + "\n";
    s += "sigma2 = " + m.sigma2.to_string() + "\n";
    s += "p = " + m.p.to_string() + "\n";
    s += "r = " + m.r.to_string() + "\n";
    s += "pi = " + m.pi.to_string() + "\n";
    s += "kappa = " + m.kappa.to_string() + "\n";
    return s;
}

// Inverse of serialize_model: six "key = family(...)" lines in any order.
inline ModelSpec parse_model(const std::map<std::string, std::string>& kv) {
    const auto need = [&](const char* k) -> const std::string& {
        const auto it = kv.find(k);
        if (it == kv.end())
            throw std::invalid_argument(std::string("model: missing key '") + k + "'");
        return it->second;
    };
    const auto opt = [&](const char* k, const char* dflt) -> std::string {
        const auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    };
    return build_model(parse_coefficient(need("g")), parse_coefficient(need("sigma2")),
                       parse_coefficient(opt("p", "zero")), parse_coefficient(need("r")),
                       parse_jump(opt("pi", "zero")), parse_kernel(need("kappa")));
}

}  // namespace branchcat
