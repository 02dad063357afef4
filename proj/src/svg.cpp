#include "dreams/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dreams/report.hpp"

namespace dreams {

namespace {

struct ViewBox {
    double x = 0, y = 0, w = 1, h = 1;
};

// Bounding box in flipped coordinates (x, -y), padded by 5% per side.
ViewBox padded_bounds(const Embedding<double>& Y) {
    if (Y.rows() == 0)
        return {};
    const double xmin = Y.col(0).minCoeff(), xmax = Y.col(0).maxCoeff();
    const double ymin = -Y.col(1).maxCoeff(), ymax = -Y.col(1).minCoeff();
    double w = xmax - xmin, h = ymax - ymin;
    const double fallback = std::max({w, h, 1.0});
    if (!(w > 0))
        w = fallback;
    if (!(h > 0))
        h = fallback;
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    return {cx - 0.55 * w, cy - 0.55 * h, 1.1 * w, 1.1 * h};
}

std::string color_for(const std::optional<std::vector<int>>& labels, Index i) {
    if (!labels)
        return unlabeled_color;
    const auto& palette = label_palette();
    const int l = (*labels)[static_cast<std::size_t>(i)];
    const auto m = static_cast<int>(palette.size());
    return palette[static_cast<std::size_t>(((l % m) + m) % m)];
}

void write_circles(std::ostream& out, const Embedding<double>& Y, const std::optional<std::vector<int>>& labels,
                   double r, double opacity) {
    const std::string rs = format_number(r);
    out << "<g fill-opacity=\"" << format_number(opacity) << "\">\n";
    for (Index i = 0; i < Y.rows(); ++i)
        out << "<circle cx=\"" << format_number(Y(i, 0)) << "\" cy=\"" << format_number(-Y(i, 1)) << "\" r=\"" << rs
            << "\" fill=\"" << color_for(labels, i) << "\"/>\n";
    out << "</g>\n";
}

void check_inputs(const Embedding<double>& Y, const std::optional<std::vector<int>>& labels) {
    if (Y.cols() != 2)
        throw ShapeError("svg: embedding must have two columns");
    if (labels && static_cast<Index>(labels->size()) != Y.rows())
        throw ShapeError("svg: label count does not match the number of points");
    require_valid(Y, "svg embedding");
}

std::string view_box_attr(const ViewBox& b) {
    return format_number(b.x) + " " + format_number(b.y) + " " + format_number(b.w) + " " + format_number(b.h);
}

} // namespace

const std::vector<std::string>& label_palette() {
    static const std::vector<std::string> palette = {
        "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
        "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
    };
    return palette;
}

std::string scatter_svg(const Embedding<double>& Y, const std::optional<std::vector<int>>& labels,
                        const ScatterStyle& style) {
    check_inputs(Y, labels);
    const ViewBox box = padded_bounds(Y);
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_number(style.width) << "\" height=\""
        << format_number(style.height) << "\" viewBox=\"" << view_box_attr(box)
        << "\" preserveAspectRatio=\"xMidYMid meet\">\n"
        << "<rect x=\"" << format_number(box.x) << "\" y=\"" << format_number(box.y) << "\" width=\""
        << format_number(box.w) << "\" height=\"" << format_number(box.h) << "\" fill=\"white\"/>\n";
    write_circles(out, Y, labels, style.radius * std::max(box.w, box.h), style.opacity);
    out << "</svg>\n";
    return out.str();
}

std::string spectrum_svg(std::vector<SpectrumPanel> panels, const std::optional<std::vector<int>>& labels,
                         double panel_size) {
    std::stable_sort(panels.begin(), panels.end(),
                     [](const SpectrumPanel& a, const SpectrumPanel& b) { return a.lambda < b.lambda; });
    const double title = 24;
    const double total_w = panel_size * static_cast<double>(panels.size());
    const double total_h = panel_size + title;
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_number(total_w) << "\" height=\""
        << format_number(total_h) << "\" viewBox=\"0 0 " << format_number(total_w) << " " << format_number(total_h)
        << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << format_number(total_w) << "\" height=\"" << format_number(total_h)
        << "\" fill=\"white\"/>\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        check_inputs(panel.embedding, labels);
        const double x0 = panel_size * static_cast<double>(p);
        const ViewBox box = padded_bounds(panel.embedding);
        out << "<g class=\"panel\" data-lambda=\"" << format_number(panel.lambda) << "\">\n"
            << "<text x=\"" << format_number(x0 + 0.5 * panel_size) << "\" y=\"17\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"14\">&#955; = " << format_number(panel.lambda) << "</text>\n"
            << "<svg x=\"" << format_number(x0) << "\" y=\"" << format_number(title) << "\" width=\""
            << format_number(panel_size) << "\" height=\"" << format_number(panel_size) << "\" viewBox=\""
            << view_box_attr(box) << "\" preserveAspectRatio=\"xMidYMid meet\">\n";
        write_circles(out, panel.embedding, labels, 0.006 * std::max(box.w, box.h), 0.8);
        out << "</svg>\n</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace dreams
