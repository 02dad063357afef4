#ifndef DREAMS_SVG_HPP
#define DREAMS_SVG_HPP

#include <optional>
#include <string>
#include <vector>

#include "dreams/core.hpp"

namespace dreams {

/// Fixed 20-color cycle; label l uses entry l mod 20.
const std::vector<std::string>& label_palette();
inline constexpr const char* unlabeled_color = "#808080";

struct ScatterStyle {
    double width = 600;
    double height = 600;
    /// Circle radius as a fraction of the larger padded data extent.
    double radius = 0.004;
    double opacity = 0.8;
};

/**
 * Standalone SVG scatter plot of a two-column embedding. The viewBox covers
 * the data bounding box padded by 5% of its extent on every side, and the
 * y axis points up.
 */
std::string scatter_svg(const Embedding<double>& Y, const std::optional<std::vector<int>>& labels = std::nullopt,
                        const ScatterStyle& style = {});

struct SpectrumPanel {
    double lambda = 0;
    Embedding<double> embedding;
};

/// Horizontal strip with one scatter panel per entry, ordered by ascending lambda.
std::string spectrum_svg(std::vector<SpectrumPanel> panels, const std::optional<std::vector<int>>& labels = std::nullopt,
                         double panel_size = 240);

} // namespace dreams

#endif // DREAMS_SVG_HPP
