#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace substruct {

namespace detail {

inline bool is_symmetric(const Eigen::MatrixXd& a, double rel_tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

[[noreturn]] inline void mm_fail(const std::string& path, int line, const std::string& msg) {
    throw std::runtime_error("matrix market: " + path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace detail

/// Write a dense matrix in Matrix Market coordinate format.  Symmetric
/// matrices use symmetric storage (lower triangle); entries are printed at
/// 17 significant digits so the round trip is lossless.
inline void save_matrix(const Eigen::MatrixXd& a, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("matrix market: cannot open " + path + " for writing");

    const bool sym = detail::is_symmetric(a);
    std::vector<std::tuple<int, int, double>> entries;
    for (int c = 0; c < a.cols(); ++c)
        for (int r = (sym ? c : 0); r < a.rows(); ++r)
            if (a(r, c) != 0.0) entries.emplace_back(r, c, a(r, c));

    f << "%%MatrixMarket matrix coordinate real " << (sym ? "symmetric" : "general") << "\n";
    f << a.rows() << " " << a.cols() << " " << entries.size() << "\n";
    char buf[64];
    for (auto [r, c, v] : entries) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        f << (r + 1) << " " << (c + 1) << " " << buf << "\n";
    }
    if (!f) throw std::runtime_error("matrix market: write failed for " + path);
}

inline Eigen::MatrixXd load_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("matrix market: cannot open " + path);

    std::string line;
    int lineno = 0;

    if (!std::getline(f, line)) detail::mm_fail(path, 1, "empty file");
    ++lineno;
    std::istringstream hdr(line);
    std::string banner, object, format, field, symmetry;
    hdr >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix")
        detail::mm_fail(path, lineno, "not a MatrixMarket matrix header");
    if (format != "coordinate") detail::mm_fail(path, lineno, "only coordinate format supported");
    if (field != "real") detail::mm_fail(path, lineno, "only real field supported");
    const bool sym = (symmetry == "symmetric");
    if (!sym && symmetry != "general")
        detail::mm_fail(path, lineno, "unsupported symmetry '" + symmetry + "'");

    // size line (skip comments)
    long rows = -1, cols = -1, nnz = -1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        std::istringstream sz(line);
        if (!(sz >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
            detail::mm_fail(path, lineno, "malformed size line");
        break;
    }
    if (rows < 0) detail::mm_fail(path, lineno, "missing size line");
    if (sym && rows != cols) detail::mm_fail(path, lineno, "symmetric matrix must be square");

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
    long seen = 0;
    while (seen < nnz) {
        if (!std::getline(f, line)) detail::mm_fail(path, lineno + 1, "unexpected end of file");
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream es(line);
        long r, c;
        double v;
        if (!(es >> r >> c >> v)) detail::mm_fail(path, lineno, "malformed entry");
        if (r < 1 || r > rows || c < 1 || c > cols) detail::mm_fail(path, lineno, "entry index out of range");
        a(r - 1, c - 1) = v;
        if (sym && r != c) a(c - 1, r - 1) = v;
        ++seen;
    }
    return a;
}

}  // namespace substruct
