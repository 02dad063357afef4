#ifndef DREAMS_TEST_SUPPORT_HPP
#define DREAMS_TEST_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dreams/core.hpp"
#include "dreams/rng.hpp"

namespace dreams::test {

inline DataMatrix gaussian(Index rows, Index cols, std::uint64_t seed, double sd = 1.0) {
    Rng rng(seed);
    DataMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = sd * rng.normal();
    return m;
}

inline Embedding<double> gaussian_embedding(Index rows, std::uint64_t seed, double sd = 1.0) {
    return gaussian(rows, 2, seed, sd);
}

/// Largest entrywise |a - b| / max(|b|, floor).
template <typename A, typename B>
double max_relative_error(const A& a, const B& b, double floor = 1e-12) {
    double worst = 0;
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(std::abs(b(i, j)), floor));
    return worst;
}

/// Central finite-difference gradient of f at Y.
template <typename F>
Embedding<double> numeric_gradient(F&& f, const Embedding<double>& Y, double h = 1e-6) {
    Embedding<double> g(Y.rows(), 2);
    Embedding<double> probe = Y;
    for (Index i = 0; i < Y.rows(); ++i) {
        for (Index c = 0; c < 2; ++c) {
            const double orig = probe(i, c);
            probe(i, c) = orig + h;
            const double up = f(probe);
            probe(i, c) = orig - h;
            const double down = f(probe);
            probe(i, c) = orig;
            g(i, c) = (up - down) / (2 * h);
        }
    }
    return g;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("dreams_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace dreams::test

#endif // DREAMS_TEST_SUPPORT_HPP
