#include <limits>

#include "dwell/kernels.hpp"

namespace dwell::kernels {

void SegmentSoA::add_line(int id, double ax, double ay, double ex, double ey) {
  line_ax.push_back(ax);
  line_ay.push_back(ay);
  line_ex.push_back(ex);
  line_ey.push_back(ey);
  line_id.push_back(id);
  ++line_count;
}

void SegmentSoA::add_arc(int id, double cx, double cy, double r, double u0x, double u0y, double u1x,
                         double u1y, bool major) {
  arc_cx.push_back(cx);
  arc_cy.push_back(cy);
  arc_r2.push_back(r * r);
  arc_r.push_back(r);
  arc_u0x.push_back(u0x);
  arc_u0y.push_back(u0y);
  arc_u1x.push_back(u1x);
  arc_u1y.push_back(u1y);
  arc_major.push_back(major ? 1.0 : 0.0);
  arc_id.push_back(id);
  ++arc_count;
}

void SegmentSoA::finalize() {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  auto pad = [](std::vector<double>& v, std::size_t n) { v.resize((n + kLanes - 1) / kLanes * kLanes, nan); };
  for (auto* v : {&line_ax, &line_ay, &line_ex, &line_ey}) pad(*v, line_count);
  for (auto* v : {&arc_cx, &arc_cy, &arc_r2, &arc_r, &arc_u0x, &arc_u0y, &arc_u1x, &arc_u1y, &arc_major})
    pad(*v, arc_count);
  line_id.resize(line_ax.size(), -1);
  arc_id.resize(arc_cx.size(), -1);
}

}  // namespace dwell::kernels
