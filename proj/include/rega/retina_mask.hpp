#pragma once

#include <string>
#include <vector>

#include "rega/tensor.hpp"

namespace rega {

// Cell taxonomy of the retina stencil: the fovea center, the inner ring
// (r <= r1), the outer ring (r1 < r <= r2), and everything beyond.
enum class PointClass { FP, TAP, OAP, INACTIVE };

const char* point_class_name(PointClass c);

enum class MaskVariant { HARD, SOFT };

// Binary disk stencil over a size x size kernel grid. HARD zeroes every cell
// beyond radius r2 = size/2; SOFT keeps all cells at 1. The class labels are
// identical for both variants. Non-trainable by construction.
struct RetinaMask {
  int size = 7;
  double r1 = 1.75;
  double r2 = 3.5;
  MaskVariant variant = MaskVariant::HARD;
  std::vector<double> cells;       // size*size of exactly 0.0 or 1.0
  std::vector<PointClass> classes;  // size*size

  double cell(int i, int j) const { return cells[static_cast<std::size_t>(i) * size + j]; }
  PointClass cls(int i, int j) const { return classes[static_cast<std::size_t>(i) * size + j]; }
  int ones_count() const;
};

// size odd >= 3, 0 < r1 < size/2; r2 is fixed at size/2.
RetinaMask build_mask(int size, double r1, MaskVariant variant);

PointClass classify_point(const RetinaMask& mask, int i, int j);

// The mask copied across a cin x cout channel grid, as a non-trainable
// tensor of shape {cin, cout, size, size}.
struct ChannelMask {
  RetinaMask base;
  int cin = 0;
  int cout = 0;
  Tensor realized;
};

ChannelMask realize_channels(const RetinaMask& mask, int cin, int cout);

// ASCII renderings for the CLI: '#' active / '.' zero, and F/T/O/'.' labels.
std::string render_cells(const RetinaMask& mask);
std::string render_classes(const RetinaMask& mask);

}  // namespace rega
