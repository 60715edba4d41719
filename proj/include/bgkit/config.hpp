#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bgkit/common.hpp"
#include "bgkit/model.hpp"

namespace bgkit {

/// Carries every violation found in one pass, each naming the offending key.
struct ConfigError : std::runtime_error {
    std::vector<std::string> violations;
    explicit ConfigError(std::vector<std::string> v)
        : std::runtime_error(join(v)), violations(std::move(v)) {}

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& m : v) s += "\n  - " + m;
        return s;
    }
};

// Flat INI config. Grid box: explicit Lx/Ly win; otherwise auto-sized as
// k_sigma standard deviations of the stationary marginals.
struct RunConfig {
    // [model]
    double rho = 1.0;
    double delta = 0.0;
    double lambda = 1.0;
    double sigma = 1.0;
    int d = 1;
    Kernel kernel = Kernel::Q1;
    std::string perturbation = "zero";  // zero | cosine
    double cosine_amplitude = 1.0;
    // [grid]
    double Lx = 0.0;  // 0 = auto from k_sigma
    double Ly = 0.0;
    int Nx = 256;
    int Ny = 256;
    double k_sigma = 6.0;
    // [run]
    double T = 5.0;
    double dt = 1e-3;
    int observe_every = 50;
    std::uint64_t seed = 12345;
    long n_particles = 100000;
    double init_mean_x = 1.0;
    double init_mean_y = 0.0;
    double eps = 1e-30;
    double ode_dt = 1e-3;
    // [output]
    std::string out_dir = ".";
    int precision = 17;
    bool write_field = false;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

struct KeyReader {
    std::map<std::string, std::string> kv;  // "section.key" -> raw value
    std::vector<std::string>* errs;
    std::vector<std::string> seen;

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    template <class Parse>
    void get(const std::string& key, Parse&& parse) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        seen.push_back(key);
        parse(it->second);
    }

    void num(const std::string& key, double& out) {
        get(key, [&](const std::string& v) {
            try {
                std::size_t pos = 0;
                const double x = std::stod(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
                out = x;
            } catch (const std::exception&) {
                errs->push_back(key + ": not a number: '" + v + "'");
            }
        });
    }
    void integer(const std::string& key, long long& out) {
        get(key, [&](const std::string& v) {
            try {
                std::size_t pos = 0;
                const long long x = std::stoll(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
                out = x;
            } catch (const std::exception&) {
                errs->push_back(key + ": not an integer: '" + v + "'");
            }
        });
    }
    void boolean(const std::string& key, bool& out) {
        get(key, [&](const std::string& v) {
            if (v == "true" || v == "1")
                out = true;
            else if (v == "false" || v == "0")
                out = false;
            else
                errs->push_back(key + ": not a boolean (true/false): '" + v + "'");
        });
    }
    void text(const std::string& key, std::string& out) {
        get(key, [&](const std::string& v) { out = v; });
    }
};

}  // namespace detail

/// Constraint check; returns all violations, each naming its key.
inline std::vector<std::string> validate_config(const RunConfig& c) {
    std::vector<std::string> errs;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) errs.push_back(msg);
    };
    check(c.rho > 0.0 && std::isfinite(c.rho), "model.rho: must be finite and > 0");
    check(c.lambda > 0.0 && std::isfinite(c.lambda), "model.lambda: must be finite and > 0");
    check(c.sigma > 0.0 && std::isfinite(c.sigma), "model.sigma: must be finite and > 0");
    check(c.delta >= 0.0 && std::isfinite(c.delta), "model.delta: must be finite and >= 0");
    check(c.d >= 1, "model.d: must be >= 1");
    check(c.perturbation == "zero" || c.perturbation == "cosine",
          "model.perturbation: must be 'zero' or 'cosine'");
    check(std::abs(c.cosine_amplitude) <= 1.0 && std::isfinite(c.cosine_amplitude),
          "model.cosine_amplitude: must satisfy |amplitude| <= 1 (Hessian bound)");
    check(c.Lx >= 0.0 && std::isfinite(c.Lx), "grid.Lx: must be >= 0 (0 = auto)");
    check(c.Ly >= 0.0 && std::isfinite(c.Ly), "grid.Ly: must be >= 0 (0 = auto)");
    check((c.Lx > 0.0) == (c.Ly > 0.0), "grid.Lx/grid.Ly: set both or neither");
    check(c.Nx >= 4, "grid.Nx: must be >= 4");
    check(c.Ny >= 4, "grid.Ny: must be >= 4");
    check(c.k_sigma > 0.0 && std::isfinite(c.k_sigma), "grid.k_sigma: must be > 0");
    check(c.T > 0.0 && std::isfinite(c.T), "run.T: must be finite and > 0");
    check(c.dt > 0.0 && std::isfinite(c.dt), "run.dt: must be finite and > 0");
    check(c.observe_every >= 1, "run.observe_every: must be >= 1");
    check(c.n_particles >= 1, "run.n_particles: must be >= 1");
    check(std::isfinite(c.init_mean_x), "run.init_mean_x: must be finite");
    check(std::isfinite(c.init_mean_y), "run.init_mean_y: must be finite");
    check(c.eps > 0.0 && std::isfinite(c.eps), "run.eps: must be > 0");
    check(c.ode_dt > 0.0 && c.ode_dt <= 1e-3 + 1e-15, "run.ode_dt: must be in (0, 1e-3]");
    check(c.precision >= 1 && c.precision <= 17, "output.precision: must be in [1, 17]");
    return errs;
}

/// Parses INI text ('#'/';' comments), filling defaults. Collects every
/// problem — unknown keys, bad literals, missing required keys, constraint
/// violations — before throwing.
inline RunConfig parse_config(const std::string& text) {
    std::vector<std::string> errs;
    std::map<std::string, std::string> kv;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errs.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errs.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            errs.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (kv.count(full)) errs.push_back("duplicate key '" + full + "'");
        kv[full] = val;
    }

    RunConfig c;
    detail::KeyReader r{std::move(kv), &errs, {}};

    for (const char* req : {"model.rho", "model.lambda", "model.sigma"})
        if (!r.has(req)) errs.push_back(std::string("missing required key '") + req + "'");

    r.num("model.rho", c.rho);
    r.num("model.delta", c.delta);
    r.num("model.lambda", c.lambda);
    r.num("model.sigma", c.sigma);
    long long tmp_i = 0;
    tmp_i = c.d;
    r.integer("model.d", tmp_i);
    c.d = static_cast<int>(tmp_i);
    r.get("model.kernel", [&](const std::string& v) {
        if (v == "q1" || v == "Q1")
            c.kernel = Kernel::Q1;
        else if (v == "q2" || v == "Q2")
            c.kernel = Kernel::Q2;
        else
            errs.push_back("model.kernel: must be 'q1' or 'q2', got '" + v + "'");
    });
    r.text("model.perturbation", c.perturbation);
    r.num("model.cosine_amplitude", c.cosine_amplitude);

    r.num("grid.Lx", c.Lx);
    r.num("grid.Ly", c.Ly);
    tmp_i = c.Nx;
    r.integer("grid.Nx", tmp_i);
    c.Nx = static_cast<int>(tmp_i);
    tmp_i = c.Ny;
    r.integer("grid.Ny", tmp_i);
    c.Ny = static_cast<int>(tmp_i);
    r.num("grid.k_sigma", c.k_sigma);

    r.num("run.T", c.T);
    r.num("run.dt", c.dt);
    tmp_i = c.observe_every;
    r.integer("run.observe_every", tmp_i);
    c.observe_every = static_cast<int>(tmp_i);
    tmp_i = static_cast<long long>(c.seed);
    r.integer("run.seed", tmp_i);
    c.seed = static_cast<std::uint64_t>(tmp_i);
    tmp_i = c.n_particles;
    r.integer("run.n_particles", tmp_i);
    c.n_particles = static_cast<long>(tmp_i);
    r.num("run.init_mean_x", c.init_mean_x);
    r.num("run.init_mean_y", c.init_mean_y);
    r.num("run.eps", c.eps);
    r.num("run.ode_dt", c.ode_dt);

    r.text("output.out_dir", c.out_dir);
    tmp_i = c.precision;
    r.integer("output.precision", tmp_i);
    c.precision = static_cast<int>(tmp_i);
    r.boolean("output.write_field", c.write_field);

    for (const auto& [key, val] : r.kv) {
        bool known = false;
        for (const auto& s : r.seen)
            if (s == key) known = true;
        if (!known) errs.push_back("unknown key '" + key + "'");
    }

    for (auto& v : validate_config(c)) errs.push_back(std::move(v));
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical form: every key, fixed order, full-precision floats.
/// parse_config(print_config(c)) == c.
inline std::string print_config(const RunConfig& c) {
    std::ostringstream out;
    out << "[model]\n";
    out << "rho = " << fmt17(c.rho) << "\n";
    out << "delta = " << fmt17(c.delta) << "\n";
    out << "lambda = " << fmt17(c.lambda) << "\n";
    out << "sigma = " << fmt17(c.sigma) << "\n";
    out << "d = " << c.d << "\n";
    out << "kernel = " << (c.kernel == Kernel::Q1 ? "q1" : "q2") << "\n";
    out << "perturbation = " << c.perturbation << "\n";
    out << "cosine_amplitude = " << fmt17(c.cosine_amplitude) << "\n";
    out << "\n[grid]\n";
    out << "Lx = " << fmt17(c.Lx) << "\n";
    out << "Ly = " << fmt17(c.Ly) << "\n";
    out << "Nx = " << c.Nx << "\n";
    out << "Ny = " << c.Ny << "\n";
    out << "k_sigma = " << fmt17(c.k_sigma) << "\n";
    out << "\n[run]\n";
    out << "T = " << fmt17(c.T) << "\n";
    out << "dt = " << fmt17(c.dt) << "\n";
    out << "observe_every = " << c.observe_every << "\n";
    out << "seed = " << c.seed << "\n";
    out << "n_particles = " << c.n_particles << "\n";
    out << "init_mean_x = " << fmt17(c.init_mean_x) << "\n";
    out << "init_mean_y = " << fmt17(c.init_mean_y) << "\n";
    out << "eps = " << fmt17(c.eps) << "\n";
    out << "ode_dt = " << fmt17(c.ode_dt) << "\n";
    out << "\n[output]\n";
    out << "out_dir = " << c.out_dir << "\n";
    out << "precision = " << c.precision << "\n";
    out << "write_field = " << (c.write_field ? "true" : "false") << "\n";
    return out.str();
}

inline ModelParams to_model_params(const RunConfig& c) {
    ModelParams p;
    p.rho = c.rho;
    p.delta = c.delta;
    p.lambda = c.lambda;
    p.sigma = c.sigma;
    p.d = c.d;
    p.kernel = c.kernel;
    p.perturbation =
        c.perturbation == "cosine" ? Perturbation::Cosine(c.cosine_amplitude) : Perturbation::Zero();
    return p;
}

}  // namespace bgkit
