/*
 * Observable corpora: lists of (f, g) pairs for bracket identities and lists
 * of single functions for kernel checks.
 *
 * File format, one entry per line, '#' starts a comment:
 *     version = v1
 *     sx(0) ; sy(0)*sz(1)      pair
 *     sz(0)*sz(1)              function
 */
#pragma once

#include "observable.hpp"

#include <fstream>
#include <sstream>

namespace kmslab {

struct ObservablePair {
    Observable f;
    Observable g;
};

struct Corpus {
    std::string version = "v1";
    std::vector<ObservablePair> pairs;
    std::vector<Observable> functions;
};

namespace detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace detail

inline Corpus parse_corpus(std::string_view text, ManifoldKind kind, int dim) {
    Corpus c;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.rfind("version", 0) == 0 && t.find('=') != std::string::npos) {
            c.version = detail::trim(t.substr(t.find('=') + 1));
            continue;
        }
        try {
            if (auto semi = t.find(';'); semi != std::string::npos) {
                c.pairs.push_back({Observable::parse(detail::trim(t.substr(0, semi)), kind, dim),
                                   Observable::parse(detail::trim(t.substr(semi + 1)), kind, dim)});
            } else {
                c.functions.push_back(Observable::parse(t, kind, dim));
            }
        } catch (const ParseError& e) {
            throw ParseError("corpus: " + e.message, lineno, e.column);
        }
    }
    return c;
}

inline Corpus load_corpus(const std::string& path, ManifoldKind kind, int dim) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus file '" + path + "'", "corpus");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_corpus(ss.str(), kind, dim);
}

// Default pair corpus on sites 0 and 1 (shifted along the first axis).
inline Corpus default_pair_corpus(ManifoldKind kind, int dim) {
    std::string o = dim == 1 ? "0" : dim == 2 ? "0,0" : "0,0,0";
    std::string n = dim == 1 ? "1" : dim == 2 ? "1,0" : "1,0,0";
    auto a = [&](const char* sym) { return std::string(sym) + "(" + o + ")"; };
    auto b = [&](const char* sym) { return std::string(sym) + "(" + n + ")"; };
    std::ostringstream s;
    s << "version = v1\n";
    if (kind == ManifoldKind::Sphere2) {
        s << a("sx") << " ; " << a("sy") << "\n"
          << a("sx") << " ; " << a("sy") << "*" << b("sz") << "\n"
          << a("sy") << " ; " << a("sz") << "*" << b("sx") << "\n"
          << a("sz") << " ; " << a("sx") << "*" << b("sy") << "\n"
          << a("sx") << "*" << b("sx") << " ; " << a("sy") << "\n"
          << a("sz") << " ; " << b("sz") << "\n"
          << a("sx") << "*" << b("sy") << " ; " << a("sz") << "*" << b("sz") << "\n"
          << a("sx") << "+" << b("sy") << " ; " << a("sz") << "*" << b("sx") << "\n"
          << a("sz") << "^2 ; " << a("sx") << "*" << a("sy") << "\n"
          << a("sx") << "*" << a("sz") << " ; " << a("sy") << "*" << b("sx") << "+" << b("sz") << "\n";
    } else {
        s << "cos(" << a("q") << ") ; sin(" << a("p") << ")\n"
          << "sin(" << a("q") << ") ; cos(" << a("p") << ")*cos(" << b("q") << ")\n"
          << "cos(" << a("p") << ") ; sin(" << a("q") << "-" << b("q") << ")\n"
          << "sin(" << a("p") << ") ; cos(" << a("q") << ")*sin(" << b("p") << ")\n"
          << "cos(" << a("q") << "-" << b("q") << ") ; sin(" << a("p") << ")\n"
          << "cos(" << a("q") << ") ; cos(" << b("q") << ")\n"
          << "sin(" << a("q") << ")*cos(" << b("p") << ") ; cos(" << a("p") << "+" << b("q") << ")\n"
          << "exp(cos(" << a("q") << ")) ; sin(" << a("p") << ")\n"
          << "cos(" << a("q") << ")^2 ; sin(" << a("q") << ")*cos(" << a("p") << ")\n"
          << "sin(" << a("p") << "+" << a("q") << ") ; cos(" << b("p") << ")+sin(" << a("q") << ")\n";
    }
    return parse_corpus(s.str(), kind, dim);
}

// Default single-function corpus on sites -1..2 along the first axis.
inline Corpus default_function_corpus(ManifoldKind kind, int dim) {
    auto site = [&](int k) {
        std::string s = std::to_string(k);
        for (int d = 1; d < dim; ++d) s += ",0";
        return s;
    };
    auto c = [&](const char* sym, int k) { return std::string(sym) + "(" + site(k) + ")"; };
    std::ostringstream s;
    s << "version = v1\n";
    if (kind == ManifoldKind::Sphere2) {
        s << c("sz", 0) << "\n"
          << c("sx", 0) << "\n"
          << c("sz", 0) << "^2\n"
          << c("sx", 0) << "*" << c("sx", 1) << "+" << c("sy", 0) << "*" << c("sy", 1) << "+" << c("sz", 0) << "*"
          << c("sz", 1) << "\n"
          << c("sz", 1) << "\n"
          << c("sx", 0) << "*" << c("sy", 1) << "\n"
          << c("sz", -1) << "*" << c("sz", 0) << "\n"
          << "exp(" << c("sz", 0) << ")\n"
          << "cos(" << c("sx", 0) << "+" << c("sy", 1) << ")\n"
          << c("sz", 2) << "*" << c("sx", 1) << "+" << c("sy", 0) << "^3\n";
    } else {
        s << "cos(" << c("q", 0) << ")\n"
          << "sin(" << c("p", 0) << ")\n"
          << "cos(" << c("q", 0) << "-" << c("q", 1) << ")\n"
          << "cos(" << c("p", 1) << ")\n"
          << "sin(" << c("q", 0) << ")*cos(" << c("p", 1) << ")\n"
          << "cos(" << c("q", -1) << "-" << c("q", 0) << ")\n"
          << "exp(sin(" << c("q", 0) << "))\n"
          << "cos(" << c("q", 0) << ")^2\n"
          << "sin(" << c("p", 0) << "+" << c("q", 1) << ")\n"
          << "cos(" << c("q", 2) << ")*sin(" << c("q", 1) << ")\n";
    }
    return parse_corpus(s.str(), kind, dim);
}

} // namespace kmslab
