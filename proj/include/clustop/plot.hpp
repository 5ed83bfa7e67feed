#pragma once

#include <optional>
#include <span>
#include <string>

#include "clustop/embedding.hpp"

namespace clustop {

/// Fill color for a cluster label; noise (-1) is gray.
std::string cluster_color(int label);

/// SVG scatter of a 2-D embedding colored by `labels`, with one glyph shape
/// per true label when `truth` is given, and a legend. Output depends only
/// on the inputs. Throws InvalidArgument unless the embedding has two columns.
std::string render_scatter_svg(const EmbeddingMatrix& xy, std::span<const int> labels,
                               std::optional<std::span<const int>> truth = std::nullopt);

}  // namespace clustop
