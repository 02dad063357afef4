#ifndef DREAMS_DATASET_HPP
#define DREAMS_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dreams/core.hpp"
#include "dreams/rng.hpp"

namespace dreams {

/// Data matrix plus optional per-row class labels. Labels are only used for plot colors.
struct Dataset {
    DataMatrix data;
    std::optional<std::vector<int>> labels;
    std::string name;

    Index size() const { return data.rows(); }
};

enum class MatrixFormat { csv, raw_f64 };

MatrixFormat parse_format(const std::string& name);
std::string format_name(MatrixFormat format);

struct LoadOptions {
    MatrixFormat format = MatrixFormat::csv;
    /// CSV only: the final column holds an integer label.
    bool label_column = false;
};

/**
 * Reads a rectangular numeric table.
 *
 * CSV: comma separated, '.' decimal point, no header. Blank lines are skipped.
 * raw-f64: 16-byte header of two little-endian u64 (rows, cols) followed by
 * rows * cols little-endian doubles in row-major order.
 */
Dataset load_matrix(const std::filesystem::path& path, const LoadOptions& options = {});

/// Parses CSV text already in memory; `name` is used in error messages only.
Dataset parse_csv(const std::string& text, bool label_column = false, const std::string& name = "<memory>");

/// Writes `data` as CSV with shortest round-trip formatting, optionally followed by a label column.
void save_csv(const std::filesystem::path& path, const DataMatrix& data,
              const std::optional<std::vector<int>>& labels = std::nullopt);

std::string to_csv(const DataMatrix& data, const std::optional<std::vector<int>>& labels = std::nullopt);

void save_raw_f64(const std::filesystem::path& path, const DataMatrix& data);

struct HierarchyParams {
    Index macro = 5;
    Index micro = 5;
    Index per_cluster = 100;
    Index dim = 50;
    double macro_sep = 100.0;
    double micro_sep = 10.0;
    double noise_sd = 1.0;
};

/**
 * Two-level Gaussian mixture with both prominent local and global structure.
 *
 * Macro centers are N(0, s^2 I) with s = macro_sep / sqrt(2 dim), so their
 * expected pairwise distance is about macro_sep. Micro centers are offset from
 * their macro center the same way at scale micro_sep, and each point adds
 * N(0, noise_sd^2 I). Label of a point is macro_id * micro + micro_id.
 * Rows are ordered by label.
 */
Dataset gen_hierarchical(const HierarchyParams& params, Rng& rng);

} // namespace dreams

#endif // DREAMS_DATASET_HPP
