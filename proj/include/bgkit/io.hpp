#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bgkit/certificate.hpp"
#include "bgkit/common.hpp"
#include "bgkit/functionals.hpp"
#include "bgkit/grid.hpp"
#include "bgkit/particles.hpp"

namespace bgkit {

inline std::string fmt_g(double x, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    return buf;
}

inline std::string certificate_csv(const Certificate& c, int precision = 17) {
    std::ostringstream out;
    out << "rho,lambda,delta,gamma_star,gamma_opt,a,b,C,cond_bound,delta_threshold,"
           "effective_rate,psd_margin,valid\n";
    auto g = [&](double x) { return fmt_g(x, precision); };
    out << g(c.rho) << ',' << g(c.lambda) << ',' << g(c.delta) << ',' << g(c.gamma_star) << ','
        << g(c.gamma_opt) << ',' << g(c.a) << ',' << g(c.b) << ',' << g(c.C) << ','
        << g(c.cond_bound) << ',' << g(c.delta_threshold) << ',' << g(c.effective_rate) << ','
        << g(c.psd_margin) << ',' << (c.valid ? 1 : 0) << '\n';
    return out.str();
}

inline std::string decay_series_csv(const DecaySeries& s, int precision = 17) {
    std::ostringstream out;
    out << "t,I,I_M,entropy,l2,mass\n";
    auto g = [&](double x) { return fmt_g(x, precision); };
    for (std::size_t i = 0; i < s.t.size(); ++i)
        out << g(s.t[i]) << ',' << g(s.fisher_plain[i]) << ',' << g(s.fisher_twist[i]) << ','
            << g(s.entropy[i]) << ',' << g(s.l2[i]) << ',' << g(s.mass[i]) << '\n';
    return out.str();
}

// Moment series: means, then the upper triangle of E[z z^T] row by row, then
// the matching standard errors (zeros for exact series).
inline std::string moment_series_csv(const MomentSeries& s, int precision = 17) {
    require(!s.t.empty(), "moment_series_csv: empty series");
    const int dim = static_cast<int>(s.mean[0].size());
    const int d = dim / 2;
    std::ostringstream out;
    auto comp = [&](int k) {
        return (k < d ? "x" + std::to_string(k) : "y" + std::to_string(k - d));
    };
    out << "t";
    for (int k = 0; k < dim; ++k) out << ",m_" << comp(k);
    for (int a = 0; a < dim; ++a)
        for (int b = a; b < dim; ++b) out << ",P_" << comp(a) << "_" << comp(b);
    for (int k = 0; k < dim; ++k) out << ",se_m_" << comp(k);
    for (int a = 0; a < dim; ++a)
        for (int b = a; b < dim; ++b) out << ",se_P_" << comp(a) << "_" << comp(b);
    out << '\n';
    auto g = [&](double x) { return fmt_g(x, precision); };
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        out << g(s.t[i]);
        for (int k = 0; k < dim; ++k) out << ',' << g(s.mean[i](k));
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b) out << ',' << g(s.second[i](a, b));
        for (int k = 0; k < dim; ++k) out << ',' << g(s.has_se() ? s.mean_se[i](k) : 0.0);
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b)
                out << ',' << g(s.has_se() ? s.second_se[i](a, b) : 0.0);
        out << '\n';
    }
    return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);  // binary: no newline translation, bytes as given
    require(static_cast<bool>(out), "cannot open for writing: " + path);
    out << text;
    require(static_cast<bool>(out), "write failed: " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Field dump: one text header line, then Nx*Ny little-endian doubles,
/// row-major with x fastest (matching PhaseGrid::idx).
inline void write_field(const std::string& path, const DensityField& f) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open for writing: " + path);
    const auto& g = *f.grid;
    out << "Nx " << g.Nx << " Ny " << g.Ny << " Lx " << fmt17(g.Lx) << " Ly " << fmt17(g.Ly)
        << "\n";
    out.write(reinterpret_cast<const char*>(f.h.data()),
              static_cast<std::streamsize>(f.h.size() * sizeof(double)));
    require(static_cast<bool>(out), "write failed: " + path);
}

struct FieldFile {
    int Nx = 0, Ny = 0;
    double Lx = 0.0, Ly = 0.0;
    std::vector<double> h;
};

inline FieldFile read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open for reading: " + path);
    std::string line;
    std::getline(in, line);
    std::istringstream hdr(line);
    std::string kx, ky, klx, kly;
    FieldFile f;
    hdr >> kx >> f.Nx >> ky >> f.Ny >> klx >> f.Lx >> kly >> f.Ly;
    require(kx == "Nx" && ky == "Ny" && klx == "Lx" && kly == "Ly" && f.Nx > 0 && f.Ny > 0,
            "malformed field header in " + path);
    f.h.resize(static_cast<std::size_t>(f.Nx) * f.Ny);
    in.read(reinterpret_cast<char*>(f.h.data()),
            static_cast<std::streamsize>(f.h.size() * sizeof(double)));
    require(in.gcount() == static_cast<std::streamsize>(f.h.size() * sizeof(double)),
            "truncated field payload in " + path);
    return f;
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("csv: no column named '" + name + "'");
    }
    std::vector<double> values(const std::string& name) const {
        const int c = column(name);
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(r[static_cast<std::size_t>(c)]);
        return v;
    }
};

/// Numeric CSV with one header line; used by the rate-fitting subcommand.
inline CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream hdr(line);
    std::string cell;
    while (std::getline(hdr, cell, ',')) t.columns.push_back(cell);
    if (t.columns.empty()) throw std::invalid_argument("csv: empty header");
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::invalid_argument("csv: non-numeric cell '" + cell + "'");
            }
        }
        if (vals.size() != t.columns.size()) throw std::invalid_argument("csv: ragged row");
        t.rows.push_back(std::move(vals));
    }
    return t;
}

}  // namespace bgkit
