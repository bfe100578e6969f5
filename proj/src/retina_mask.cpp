#include "rega/retina_mask.hpp"

#include <sstream>

namespace rega {

const char* point_class_name(PointClass c) {
  switch (c) {
    case PointClass::FP: return "FP";
    case PointClass::TAP: return "TAP";
    case PointClass::OAP: return "OAP";
    case PointClass::INACTIVE: return "INACTIVE";
  }
  return "?";
}

int RetinaMask::ones_count() const {
  int n = 0;
  for (double v : cells) n += (v != 0.0) ? 1 : 0;
  return n;
}

RetinaMask build_mask(int size, double r1, MaskVariant variant) {
  if (size < 3 || size % 2 == 0)
    throw ValueError("build_mask: size must be odd and >= 3, got " + std::to_string(size));
  const double r2 = size / 2.0;
  if (!(r1 > 0.0) || !(r1 < r2))
    throw ValueError("build_mask: r1 must lie in (0, " + std::to_string(r2) + "), got " +
                     std::to_string(r1));
  RetinaMask m;
  m.size = size;
  m.r1 = r1;
  m.r2 = r2;
  m.variant = variant;
  m.cells.resize(static_cast<std::size_t>(size) * size);
  m.classes.resize(static_cast<std::size_t>(size) * size);
  const int c = (size - 1) / 2;
  // Radii are compared on squared values: the integer cell distance is exact
  // and ties land inclusively on the inner class.
  const double r1sq = r1 * r1;
  const double r2sq = r2 * r2;
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const int di = i - c, dj = j - c;
      const double rsq = static_cast<double>(di * di + dj * dj);
      PointClass cls;
      if (rsq == 0.0)
        cls = PointClass::FP;
      else if (rsq <= r1sq)
        cls = PointClass::TAP;
      else if (rsq <= r2sq)
        cls = PointClass::OAP;
      else
        cls = PointClass::INACTIVE;
      const std::size_t idx = static_cast<std::size_t>(i) * size + j;
      m.classes[idx] = cls;
      m.cells[idx] = (variant == MaskVariant::SOFT || rsq <= r2sq) ? 1.0 : 0.0;
    }
  }
  return m;
}

PointClass classify_point(const RetinaMask& mask, int i, int j) {
  if (i < 0 || i >= mask.size || j < 0 || j >= mask.size)
    throw ValueError("classify_point: (" + std::to_string(i) + "," + std::to_string(j) +
                     ") outside size-" + std::to_string(mask.size) + " mask");
  return mask.cls(i, j);
}

ChannelMask realize_channels(const RetinaMask& mask, int cin, int cout) {
  if (cin < 1 || cout < 1)
    throw ValueError("realize_channels: channel extents must be >= 1");
  ChannelMask cm;
  cm.base = mask;
  cm.cin = cin;
  cm.cout = cout;
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(cin) * cout * mask.cells.size());
  for (int a = 0; a < cin * cout; ++a)
    data.insert(data.end(), mask.cells.begin(), mask.cells.end());
  cm.realized = Tensor::from_data({cin, cout, mask.size, mask.size}, std::move(data), false);
  return cm;
}

std::string render_cells(const RetinaMask& mask) {
  std::ostringstream os;
  for (int i = 0; i < mask.size; ++i) {
    for (int j = 0; j < mask.size; ++j) {
      if (j) os << ' ';
      os << (mask.cell(i, j) != 0.0 ? '#' : '.');
    }
    os << '\n';
  }
  return os.str();
}

std::string render_classes(const RetinaMask& mask) {
  std::ostringstream os;
  for (int i = 0; i < mask.size; ++i) {
    for (int j = 0; j < mask.size; ++j) {
      if (j) os << ' ';
      switch (mask.cls(i, j)) {
        case PointClass::FP: os << 'F'; break;
        case PointClass::TAP: os << 'T'; break;
        case PointClass::OAP: os << 'O'; break;
        case PointClass::INACTIVE: os << '.'; break;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rega
