#include "dreams/dataset.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

namespace dreams {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

double parse_cell(std::string_view cell, std::size_t row) {
    if (!cell.empty() && cell.front() == '+')
        cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("non-numeric cell '" + std::string(cell) + "'", row);
    return value;
}

int parse_label(std::string_view cell, std::size_t row) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("label '" + std::string(cell) + "' is not an integer", row);
    return value;
}

template <typename T>
T to_little_endian(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        std::memcpy(&value, bytes, sizeof(T));
    }
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

} // namespace

MatrixFormat parse_format(const std::string& name) {
    if (name == "csv")
        return MatrixFormat::csv;
    if (name == "raw-f64" || name == "raw" || name == "f64")
        return MatrixFormat::raw_f64;
    throw ConfigError("unknown matrix format '" + name + "' (expected csv or raw-f64)");
}

std::string format_name(MatrixFormat format) { return format == MatrixFormat::csv ? "csv" : "raw-f64"; }

Dataset parse_csv(const std::string& text, bool label_column, const std::string& name) {
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::string_view rest(text);
    while (!rest.empty()) {
        const std::size_t nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
        ++line_no;
        if (trim(line).empty())
            continue;
        const auto fields = split_fields(line);
        const std::size_t width = fields.size() - (label_column ? 1 : 0);
        if (label_column && fields.size() < 2)
            throw ParseError("row needs at least one value and a label", line_no);
        if (rows == 0)
            cols = width;
        else if (width != cols)
            throw ParseError("ragged row: expected " + std::to_string(cols) + " values, found " +
                                 std::to_string(width),
                             line_no);
        for (std::size_t c = 0; c < width; ++c) {
            const double v = parse_cell(fields[c], line_no);
            if (!std::isfinite(v))
                throw ValidationError("non-finite value at row " + std::to_string(line_no));
            values.push_back(v);
        }
        if (label_column)
            labels.push_back(parse_label(fields.back(), line_no));
        ++rows;
    }
    if (rows == 0 || cols == 0)
        throw ParseError(name + ": no data");

    Dataset ds;
    ds.name = name;
    ds.data = Eigen::Map<const DataMatrix>(values.data(), static_cast<Index>(rows), static_cast<Index>(cols));
    if (label_column)
        ds.labels = std::move(labels);
    return ds;
}

Dataset load_matrix(const std::filesystem::path& path, const LoadOptions& options) {
    const std::string bytes = read_file(path);
    const std::string name = path.stem().string();
    if (options.format == MatrixFormat::csv)
        return parse_csv(bytes, options.label_column, name);

    if (bytes.size() < 16)
        throw ParseError(path.string() + ": raw-f64 header truncated");
    std::uint64_t header[2];
    std::memcpy(header, bytes.data(), 16);
    const std::uint64_t rows = to_little_endian(header[0]);
    const std::uint64_t cols = to_little_endian(header[1]);
    if (rows == 0 || cols == 0)
        throw ParseError(path.string() + ": raw-f64 header declares an empty matrix");
    if (rows > (bytes.size() - 16) / 8 / cols || (bytes.size() - 16) != rows * cols * 8)
        throw ParseError(path.string() + ": raw-f64 payload size does not match header " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    Dataset ds;
    ds.name = name;
    ds.data.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    const char* payload = bytes.data() + 16;
    for (std::uint64_t k = 0; k < rows * cols; ++k) {
        double v;
        std::memcpy(&v, payload + 8 * k, 8);
        v = to_little_endian(v);
        if (!std::isfinite(v))
            throw ValidationError(path.string() + ": non-finite value at row " + std::to_string(k / cols + 1));
        ds.data.data()[k] = v;
    }
    return ds;
}

std::string to_csv(const DataMatrix& data, const std::optional<std::vector<int>>& labels) {
    if (labels && static_cast<Index>(labels->size()) != data.rows())
        throw ShapeError("label count does not match row count");
    std::string out;
    out.reserve(static_cast<std::size_t>(data.size()) * 20);
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.cols(); ++j) {
            if (j)
                out.push_back(',');
            append_double(out, data(i, j));
        }
        if (labels) {
            out.push_back(',');
            out += std::to_string((*labels)[static_cast<std::size_t>(i)]);
        }
        out.push_back('\n');
    }
    return out;
}

void save_csv(const std::filesystem::path& path, const DataMatrix& data,
              const std::optional<std::vector<int>>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << to_csv(data, labels);
}

void save_raw_f64(const std::filesystem::path& path, const DataMatrix& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    const std::uint64_t header[2] = {to_little_endian(static_cast<std::uint64_t>(data.rows())),
                                     to_little_endian(static_cast<std::uint64_t>(data.cols()))};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (Index k = 0; k < data.size(); ++k) {
        const double v = to_little_endian(data.data()[k]);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

Dataset gen_hierarchical(const HierarchyParams& p, Rng& rng) {
    if (p.dim < 2)
        throw ConfigError("gen_hierarchical: dim must be at least 2");
    if (p.macro < 1 || p.micro < 1 || p.per_cluster < 1)
        throw ConfigError("gen_hierarchical: cluster counts must be at least 1");
    if (!(p.macro_sep > 0.0) || !(p.micro_sep > 0.0))
        throw ConfigError("gen_hierarchical: separations must be positive");
    if (!(p.noise_sd >= 0.0))
        throw ConfigError("gen_hierarchical: noise_sd must be non-negative");

    const double macro_scale = p.macro_sep / std::sqrt(2.0 * static_cast<double>(p.dim));
    const double micro_scale = p.micro_sep / std::sqrt(2.0 * static_cast<double>(p.dim));
    const Index n = p.macro * p.micro * p.per_cluster;

    Dataset ds;
    ds.name = "hierarchical";
    ds.data.resize(n, p.dim);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(n));

    RowVector<double> macro_center(p.dim), micro_center(p.dim);
    Index row = 0;
    for (Index a = 0; a < p.macro; ++a) {
        for (Index d = 0; d < p.dim; ++d)
            macro_center(d) = macro_scale * rng.normal();
        for (Index b = 0; b < p.micro; ++b) {
            for (Index d = 0; d < p.dim; ++d)
                micro_center(d) = macro_center(d) + micro_scale * rng.normal();
            for (Index c = 0; c < p.per_cluster; ++c, ++row) {
                for (Index d = 0; d < p.dim; ++d)
                    ds.data(row, d) = micro_center(d) + p.noise_sd * rng.normal();
                labels.push_back(static_cast<int>(a * p.micro + b));
            }
        }
    }
    ds.labels = std::move(labels);
    return ds;
}

} // namespace dreams
