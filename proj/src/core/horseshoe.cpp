#include "reeb/horseshoe.hpp"

#include "reeb/parallel.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace reeb {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string point_witness(const Vec2& z) { return "[" + fmt(z(0)) + ", " + fmt(z(1)) + "]"; }

Vec2 swap(const Vec2& z) { return Vec2(z(1), z(0)); }

// Map seen in box coordinates (coordinates exchanged for a transposed box).
struct View {
  const MapModel& m;
  bool tr;
  Vec2 f(const Vec2& z) const { return tr ? swap(m.map(swap(z))) : m.map(z); }
  Vec2 finv(const Vec2& z) const { return tr ? swap(m.inverse(swap(z))) : m.inverse(z); }
  Mat2 jac(const Vec2& z) const {
    if (!tr) return m.jacobian(z);
    const Mat2 j = m.jacobian(swap(z));
    Mat2 s;
    s << 0, 1, 1, 0;
    return s * j * s;
  }
  Mat2 jinv(const Vec2& z) const { return jac(finv(z)).inverse(); }
  Vec2 to_box(const Vec2& z) const { return tr ? swap(z) : z; }
  Vec2 from_box(const Vec2& z) const { return tr ? swap(z) : z; }
};

View view_of(const MapModel& m, const StripBox& b) {
  if (!m.map) fail_validation("horseshoe: map has no evaluator");
  if (!m.inverse) fail_validation("horseshoe: strip detection needs the inverse map");
  return View{m, b.transposed};
}

bool finite(const Vec2& z) { return std::isfinite(z(0)) && std::isfinite(z(1)); }

double interp(const std::vector<double>& s, const std::vector<double>& y, double x) {
  const std::size_t n = s.size();
  if (n == 1) return y[0];
  std::size_t k;
  if (x <= s[0])
    k = 0;
  else if (x >= s[n - 1])
    k = n - 2;
  else
    k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin()) - 1;
  const double w = (x - s[k]) / (s[k + 1] - s[k]);
  return y[k] + w * (y[k + 1] - y[k]);
}

// Membership of a point of the box in the union of vertical strips
// (preimage inside the box) or horizontal strips (image inside the box).
bool in_vertical_union(const View& v, const StripBox& b, const Vec2& z) {
  const Vec2 q = v.finv(z);
  return finite(q) && b.contains(q);
}
bool in_horizontal_union(const View& v, const StripBox& b, const Vec2& z) {
  const Vec2 q = v.f(z);
  return finite(q) && b.contains(q);
}

Vec2 line_point(bool vertical, double line, double x) {
  return vertical ? Vec2(x, line) : Vec2(line, x);
}

// Boundary between x_out (indicator false) and x_in (true) along a line.
double bisect_edge(const std::function<bool(double)>& ind, double x_out, double x_in) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (x_out + x_in);
    if (mid == x_out || mid == x_in) break;
    (ind(mid) ? x_in : x_out) = mid;
  }
  return 0.5 * (x_out + x_in);
}

struct Interval {
  double lo, hi;
};

std::vector<Interval> scan_line(const std::function<bool(double)>& ind,
                                const std::vector<double>& xs) {
  std::vector<Interval> out;
  const std::size_t n = xs.size();
  std::vector<char> in(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = ind(xs[i]) ? 1 : 0;
  std::size_t i = 0;
  while (i < n) {
    if (!in[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && in[j + 1]) ++j;
    const double lo = i == 0 ? xs[0] : bisect_edge(ind, xs[i - 1], xs[i]);
    const double hi = j + 1 == n ? xs[n - 1] : bisect_edge(ind, xs[j + 1], xs[j]);
    out.push_back({lo, hi});
    i = j + 1;
  }
  return out;
}

std::vector<double> line_samples(double a, double b, int uniform, int geometric, double floor) {
  std::vector<double> xs = linspace(a, b, static_cast<std::size_t>(uniform));
  if (geometric > 0)
    for (double g : geomspace(floor, 1.0, static_cast<std::size_t>(geometric))) xs.push_back(a + (b - a) * g);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

// Exact boundary of a strip on a given line, bracketed around the sampled one.
double exact_boundary(const View& v, const StripBox& b, const StripSystem& sys, const Strip& st,
                      double line, bool low_side) {
  const auto& family = st.vertical ? sys.vertical : sys.horizontal;
  const double lo = st.lo_at(line), hi = st.hi_at(line);
  const double w = hi - lo;
  const std::size_t k = static_cast<std::size_t>(st.index - 1);
  // Distance to the neighbouring strip on the side of the boundary.
  double room;
  const double a = st.vertical ? b.u0 : b.v0;
  const double c = st.vertical ? b.u1 : b.v1;
  if (low_side)
    room = k + 1 < family.size() ? lo - family[k + 1].hi_at(line) : lo - a;
  else
    room = k > 0 ? family[k - 1].lo_at(line) - hi : c - hi;
  const double half = std::max(0.0, std::min(0.25 * w, 0.5 * room));
  auto ind = [&](double x) {
    const Vec2 z = line_point(st.vertical, line, x);
    return st.vertical ? in_vertical_union(v, b, z) : in_horizontal_union(v, b, z);
  };
  if (low_side) {
    const double out = std::max(a, lo - half), in = lo + 0.25 * w;
    if (ind(out)) return out;
    return bisect_edge(ind, out, in);
  }
  const double out = std::min(c, hi + half), in = hi - 0.25 * w;
  if (ind(out)) return out;
  return bisect_edge(ind, out, in);
}

}  // namespace

double Strip::lo_at(double x) const { return interp(s, lo, x); }
double Strip::hi_at(double x) const { return interp(s, hi, x); }
double Strip::min_width() const {
  double w = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) w = std::min(w, hi[i] - lo[i]);
  return w;
}
double Strip::max_width() const {
  double w = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) w = std::max(w, hi[i] - lo[i]);
  return w;
}

// ---------------------------------------------------------------- detection

StripSystem detect_strips(const MapModel& map, const StripBox& box, int n_max,
                          const StripOptions& opts) {
  if (n_max < 1) fail_validation("detect_strips: n_max must be at least 1");
  if (!(box.u1 > box.u0) || !(box.v1 > box.v0)) fail_validation("detect_strips: empty box");
  if (opts.lines < 3 || opts.uniform < 16) fail_validation("detect_strips: too few samples");
  StripBox b = box;
  if (box.transposed) {
    std::swap(b.u0, b.v0);
    std::swap(b.u1, b.v1);
  }
  const View v = view_of(map, box);
  StripSystem sys;
  sys.box = box;

  auto build = [&](bool vertical) {
    const double la = vertical ? b.v0 : b.u0, lb = vertical ? b.v1 : b.u1;
    const double xa = vertical ? b.u0 : b.v0, xb = vertical ? b.u1 : b.v1;
    const double eps = 1e-9 * (lb - la);
    const auto lines = linspace(la + eps, lb - eps, static_cast<std::size_t>(opts.lines));
    const auto xs = line_samples(xa, xb, opts.uniform, opts.geometric, opts.geometric_floor);
    std::vector<std::vector<Interval>> per(lines.size());
    parallel_for(lines.size(), opts.workers, [&](std::size_t i) {
      auto ind = [&](double x) {
        const Vec2 z = line_point(vertical, lines[i], x);
        return vertical ? in_vertical_union(v, b, z) : in_horizontal_union(v, b, z);
      };
      per[i] = scan_line(ind, xs);
      std::reverse(per[i].begin(), per[i].end());  // far side first
    });
    std::size_t n_found = std::numeric_limits<std::size_t>::max();
    std::size_t worst = 0;
    for (std::size_t i = 0; i < per.size(); ++i)
      if (per[i].size() < n_found) n_found = per[i].size(), worst = i;
    if (n_found == 0)
      throw Error(ErrorKind::Validation,
                  std::string("detect_strips: no ") + (vertical ? "vertical" : "horizontal") +
                      " strip crosses the box; check the box orientation and edge labels",
                  "{\"line\": " + fmt(lines[worst]) + "}");
    const std::size_t n = std::min<std::size_t>(n_found, static_cast<std::size_t>(n_max));
    // Strip k on the next line must be nearest to strip k on this one; a
    // strip missed by the samples on some line shifts the labels.
    for (std::size_t i = 0; i + 1 < per.size(); ++i)
      for (std::size_t k = 0; k < n; ++k) {
        auto mid = [](const Interval& iv) { return 0.5 * (iv.lo + iv.hi); };
        const double c = mid(per[i + 1][k]);
        const double d = std::abs(c - mid(per[i][k]));
        for (std::size_t o = 0; o < per[i].size(); ++o)
          if (o != k && std::abs(c - mid(per[i][o])) < d)
            throw Error(ErrorKind::Numerical,
                        std::string("detect_strips: lost track of ") +
                            (vertical ? "vertical" : "horizontal") + " strip " +
                            std::to_string(k + 1) + " between lines; increase the samples",
                        "{\"line\": " + fmt(lines[i + 1]) + "}");
      }
    std::vector<Strip> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      out[k].index = static_cast<int>(k) + 1;
      out[k].vertical = vertical;
      out[k].s = lines;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        out[k].lo.push_back(per[i][k].lo);
        out[k].hi.push_back(per[i][k].hi);
      }
    }
    return out;
  };
  sys.vertical = build(true);
  sys.horizontal = build(false);
  const std::size_t n = std::min(sys.vertical.size(), sys.horizontal.size());
  sys.vertical.resize(n);
  sys.horizontal.resize(n);

  // Strict ordering on every line.
  sys.ordered = true;
  for (const auto* fam : {&sys.vertical, &sys.horizontal})
    for (std::size_t k = 0; k + 1 < fam->size(); ++k)
      for (std::size_t i = 0; i < (*fam)[k].s.size(); ++i)
        sys.ordered = sys.ordered && (*fam)[k + 1].hi[i] < (*fam)[k].lo[i];

  // Sampled interpolation error at midpoints between lines.
  for (auto* fam : {&sys.vertical, &sys.horizontal})
    for (auto& st : *fam) {
      double err = 0.0;
      for (std::size_t i = 0; i + 1 < st.s.size(); i += 4) {
        const double mid = 0.5 * (st.s[i] + st.s[i + 1]);
        err = std::max(err, std::abs(exact_boundary(v, b, sys, st, mid, true) - st.lo_at(mid)));
        err = std::max(err, std::abs(exact_boundary(v, b, sys, st, mid, false) - st.hi_at(mid)));
      }
      st.interp_error = 2.0 * err;
    }

  auto ratios = [](const std::vector<Strip>& fam, double edge) {
    std::vector<double> d, r;
    for (const auto& st : fam) d.push_back(st.center_at(0.5 * (st.s.front() + st.s.back())) - edge);
    for (std::size_t k = 0; k + 1 < d.size(); ++k) r.push_back(d[k + 1] / d[k]);
    return r;
  };
  sys.v_ratios = ratios(sys.vertical, b.u0);
  sys.h_ratios = ratios(sys.horizontal, b.v0);
  sys.accumulating = n >= 2;
  for (const auto* r : {&sys.v_ratios, &sys.h_ratios})
    for (double x : *r) sys.accumulating = sys.accumulating && x > 0.0 && x < 1.0;
  return sys;
}

namespace {

int locate(const View& v, const StripBox& b, const StripSystem& sys, const Vec2& z,
           bool vertical) {
  const auto& fam = vertical ? sys.vertical : sys.horizontal;
  const double line = vertical ? z(1) : z(0);
  const double x = vertical ? z(0) : z(1);
  const double la = vertical ? b.v0 : b.u0, lb = vertical ? b.v1 : b.u1;
  if (!finite(z) || line < la || line > lb) return 0;
  for (const auto& st : fam) {
    const double lo = st.lo_at(line), hi = st.hi_at(line);
    const double e = st.interp_error + 1e-14;
    if (x > lo + e && x < hi - e) return st.index;
    if (x >= lo - e && x <= hi + e) {
      const bool in = vertical ? in_vertical_union(v, b, z) : in_horizontal_union(v, b, z);
      return in ? st.index : 0;
    }
  }
  return 0;
}

StripBox box_coords(const StripBox& box) {
  StripBox b = box;
  if (box.transposed) {
    std::swap(b.u0, b.v0);
    std::swap(b.u1, b.v1);
  }
  return b;
}

}  // namespace

int vertical_index(const MapModel& map, const StripSystem& sys, const Vec2& z) {
  const View v = view_of(map, sys.box);
  return locate(v, box_coords(sys.box), sys, v.to_box(z), true);
}

int horizontal_index(const MapModel& map, const StripSystem& sys, const Vec2& z) {
  const View v = view_of(map, sys.box);
  return locate(v, box_coords(sys.box), sys, v.to_box(z), false);
}

// ---------------------------------------------------------------- Moser conditions

MoserReport verify_moser_conditions(const MapModel& map, const StripSystem& sys, double tol,
                                    int substrips, std::uint64_t seed) {
  const View v = view_of(map, sys.box);
  const StripBox b = box_coords(sys.box);
  MoserReport rep;
  const std::size_t n = sys.size();
  if (n < 2) {
    rep.witness = "fewer than two strips: strips merged or overlapping (" +
                  std::to_string(n) + " found)";
    return rep;
  }

  // (N1): P(H_i) = V_i with horizontal boundaries onto the horizontal edges
  // and vertical boundaries onto the boundary of V_i.
  rep.n1 = true;
  auto fail1 = [&](const std::string& what, const Vec2& z, double err) {
    rep.n1_error = std::max(rep.n1_error, err);
    if (err > tol && rep.n1) {
      rep.n1 = false;
      rep.witness = what + " at " + point_witness(v.from_box(z)) + ", error " + fmt(err);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Strip& h = sys.horizontal[i];
    const Strip& vs = sys.vertical[i];
    for (int side = 0; side < 2; ++side) {
      int edge = -1;
      for (std::size_t k = 0; k < h.s.size(); ++k) {
        const Vec2 z(h.s[k], side == 0 ? h.lo[k] : h.hi[k]);
        const Vec2 q = v.f(z);
        const double e0 = std::abs(q(1) - b.v0), e1 = std::abs(q(1) - b.v1);
        const int this_edge = e0 < e1 ? 0 : 1;
        if (edge < 0) edge = this_edge;
        fail1("horizontal boundary of H_" + std::to_string(i + 1) + " misses a horizontal edge", z,
              std::min(e0, e1));
        if (this_edge != edge)
          fail1("horizontal boundary of H_" + std::to_string(i + 1) + " splits across edges", z, 1.0);
      }
    }
    for (double u : {h.s.front(), h.s.back()}) {
      const double lo = h.lo_at(u), hi = h.hi_at(u);
      for (double th : linspace(0.0, 1.0, 17)) {
        const Vec2 z(u, lo + th * (hi - lo));
        const Vec2 q = v.f(z);
        double err = std::numeric_limits<double>::infinity();
        if (q(1) >= b.v0 - tol && q(1) <= b.v1 + tol) {
          const double line = std::clamp(q(1), vs.s.front(), vs.s.back());
          err = std::min(std::abs(q(0) - exact_boundary(v, b, sys, vs, line, true)),
                         std::abs(q(0) - exact_boundary(v, b, sys, vs, line, false)));
        }
        fail1("vertical boundary of H_" + std::to_string(i + 1) + " misses the boundary of V_" +
                  std::to_string(i + 1),
              z, err);
      }
    }
    const double uc = 0.5 * (b.u0 + b.u1);
    const Vec2 c(uc, h.center_at(uc));
    if (locate(v, b, sys, v.f(c), true) != static_cast<int>(i + 1))
      fail1("centre of H_" + std::to_string(i + 1) + " does not map into V_" + std::to_string(i + 1),
            c, 1.0);
  }

  // (N2): sub-strips of V_i are mapped across every V_j (and sub-strips of
  // H_i pulled back across every H_j) with contracted width.
  rep.n2 = true;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto rows = linspace(b.v0 + 1e-6 * (b.v1 - b.v0), b.v1 - 1e-6 * (b.v1 - b.v0), 33);
  const auto cols = linspace(b.u0 + 1e-6 * (b.u1 - b.u0), b.u1 - 1e-6 * (b.u1 - b.u0), 33);
  for (int vertical = 1; vertical >= 0 && rep.n2; --vertical) {
    const auto& fam = vertical ? sys.vertical : sys.horizontal;
    const auto& lines = vertical ? rows : cols;
    for (std::size_t i = 0; i < n && rep.n2; ++i)
      for (int sidx = 0; sidx < substrips && rep.n2; ++sidx) {
        const double a0 = 0.8 * uni(rng);
        const double a1 = a0 + 0.2 + (0.8 - a0) * uni(rng);
        const Strip& src = fam[i];
        // Relative position of the pulled point inside the sub-strip.
        auto rel = [&](double line, double x) {
          const Vec2 z = line_point(vertical, line, x);
          const Vec2 q = vertical ? v.finv(z) : v.f(z);
          const double ql = vertical ? q(1) : q(0), qx = vertical ? q(0) : q(1);
          const double lo = src.lo_at(ql), w = src.hi_at(ql) - lo;
          return (qx - (lo + a0 * w)) / ((a1 - a0) * w);
        };
        for (std::size_t j = 0; j < n && rep.n2; ++j) {
          const Strip& dst = fam[j];
          for (double line : lines) {
            ++rep.n2_checks;
            const double lo = exact_boundary(v, b, sys, dst, line, true);
            const double hi = exact_boundary(v, b, sys, dst, line, false);
            const double pad = 1e-9 * (hi - lo);
            const double sl = rel(line, lo + pad), sh = rel(line, hi - pad);
            const bool crosses = (sl < 0.0 && sh > 1.0) || (sl > 1.0 && sh < 0.0);
            if (!crosses) {
              rep.n2 = false;
              rep.witness = std::string("(N2) ") + (vertical ? "vertical" : "horizontal") +
                            " sub-strip of strip " + std::to_string(i + 1) +
                            " does not cross strip " + std::to_string(j + 1) + " on line " +
                            fmt(line);
              break;
            }
            auto solve = [&](double target) {
              double xa = lo + pad, xb = hi - pad;
              const bool inc = sh > sl;
              for (int it = 0; it < 100; ++it) {
                const double xm = 0.5 * (xa + xb);
                ((rel(line, xm) < target) == inc ? xa : xb) = xm;
              }
              return 0.5 * (xa + xb);
            };
            const double width = std::abs(solve(1.0) - solve(0.0));
            const double q = 0.5 * (lo + hi);
            const Vec2 qz = vertical ? v.finv(line_point(true, line, q)) : v.f(line_point(false, line, q));
            const double ql = vertical ? qz(1) : qz(0);
            const double src_w = (a1 - a0) * (src.hi_at(ql) - src.lo_at(ql));
            rep.n2_contraction = std::max(rep.n2_contraction, width / src_w);
          }
        }
      }
  }
  if (rep.n2 && !(rep.n2_contraction < 1.0)) {
    rep.n2 = false;
    rep.witness = "(N2) image sub-strips are not thinner than their sources";
  }
  return rep;
}

// ---------------------------------------------------------------- cones

ConeReport cone_certificate(const MapModel& map, const StripSystem& sys, double mu,
                            int per_strip) {
  if (!(mu > 0.0) || !(mu < 1.0)) fail_validation("cone_certificate: mu must lie in (0, 1)");
  if (!map.jacobian) fail_validation("cone_certificate: map has no jacobian");
  const View v = view_of(map, sys.box);
  const StripBox b = box_coords(sys.box);
  ConeReport rep;
  rep.mu = mu;
  rep.pass = sys.size() >= 1;
  rep.min_unstable_expansion = rep.min_stable_expansion = std::numeric_limits<double>::infinity();
  const auto slopes = linspace(-mu, mu, 9);
  const int nc = std::max(2, static_cast<int>(std::sqrt(static_cast<double>(per_strip))));
  auto note = [&](const std::string& what, const Vec2& z) {
    if (rep.pass) {
      rep.pass = false;
      rep.witness = what + " at " + point_witness(v.from_box(z));
    }
  };
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const Strip& h = sys.horizontal[i];
    const Strip& vs = sys.vertical[i];
    for (int a = 0; a < nc; ++a)
      for (int c = 0; c < nc; ++c) {
        const double fa = (a + 0.5) / nc, fc = (c + 0.5) / nc;
        // Unstable cone {|xi| <= mu |zeta|} at points of H_i under DP.
        const double u = b.u0 + fa * (b.u1 - b.u0);
        const Vec2 zh(u, h.lo_at(u) + fc * (h.hi_at(u) - h.lo_at(u)));
        const Mat2 j = v.jac(zh);
        for (double s : slopes) {
          const Vec2 w = j * Vec2(s, 1.0);
          const double slope = std::abs(w(0) / w(1));
          const double ex = std::abs(w(1));
          rep.max_unstable_slope = std::max(rep.max_unstable_slope, slope);
          rep.min_unstable_expansion = std::min(rep.min_unstable_expansion, ex);
          if (!(slope <= mu)) note("unstable cone not invariant", zh);
          if (!(ex > 1.0 / mu)) note("unstable cone not expanded", zh);
        }
        // Stable cone {|zeta| <= mu |xi|} at points of V_i under DP^-1.
        const double vv = b.v0 + fa * (b.v1 - b.v0);
        const Vec2 zv(vs.lo_at(vv) + fc * (vs.hi_at(vv) - vs.lo_at(vv)), vv);
        const Mat2 ji = v.jinv(zv);
        for (double s : slopes) {
          const Vec2 w = ji * Vec2(1.0, s);
          const double slope = std::abs(w(1) / w(0));
          const double ex = std::abs(w(0));
          rep.max_stable_slope = std::max(rep.max_stable_slope, slope);
          rep.min_stable_expansion = std::min(rep.min_stable_expansion, ex);
          if (!(slope <= mu)) note("stable cone not invariant", zv);
          if (!(ex > 1.0 / mu)) note("stable cone not expanded", zv);
        }
        rep.samples += 2;
      }
  }
  return rep;
}

// ---------------------------------------------------------------- symbolic dynamics

namespace {

// Parameter intervals of the previous word, reused along a shared prefix.
struct PrefixCache {
  std::vector<int> word;
  std::vector<std::pair<double, double>> iv;
};

std::optional<Vec2> realize_in_box(const View& v, const StripSystem& sys,
                                   const std::vector<int>& word, PrefixCache* cache = nullptr) {
  const int n = static_cast<int>(sys.size());
  if (word.empty()) fail_validation("realize_word: empty word");
  for (int s : word)
    if (s < 1 || s > n) fail_validation("realize_word: symbol out of range");
  const Strip& v0 = sys.vertical[static_cast<std::size_t>(word[0] - 1)];
  auto curve = [&](double p) { return Vec2(v0.center_at(p), p); };
  double a = v0.s.front(), c = v0.s.back();
  std::size_t start = 1;
  if (cache) {
    std::size_t shared = 0;
    while (shared < word.size() && shared < cache->word.size() && shared < cache->iv.size() &&
           word[shared] == cache->word[shared])
      ++shared;
    if (shared > 0) {
      std::tie(a, c) = cache->iv[shared - 1];
      start = shared;
    }
    cache->word = word;
    cache->iv.resize(start);
    cache->iv[start - 1] = {a, c};
  }
  for (std::size_t i = start; i < word.size(); ++i) {
    const Strip& h = sys.horizontal[static_cast<std::size_t>(word[i] - 1)];
    auto y = [&](double p) {
      Vec2 z = curve(p);
      for (std::size_t k = 1; k < i; ++k) z = v.f(z);
      return z;
    };
    // Targets sit a small relative margin inside the strip so that the next
    // image still crosses the box from edge to edge.
    auto g = [&](double p, bool upper) {
      const Vec2 z = y(p);
      const double lo = h.lo_at(z(0)), hi = h.hi_at(z(0));
      const double m = std::min(1e-4 * (hi - lo), 4.0 * h.interp_error + 1e-13 * (hi - lo));
      return z(1) - (upper ? hi - m : lo + m);
    };
    // Illinois variant of regula falsi on the monotone crossing.
    auto root = [&](bool upper) -> std::optional<double> {
      double pa = a, pc = c;
      double ga = g(pa, upper), gc = g(pc, upper);
      if (!std::isfinite(ga) || !std::isfinite(gc) || (ga > 0.0) == (gc > 0.0)) return std::nullopt;
      int side = 0;
      const double floor = 1e-12 * (c - a) + 8 * std::numeric_limits<double>::epsilon() * std::abs(c);
      for (int it = 0; it < 200 && pc - pa > floor; ++it) {
        double pm = (pa * gc - pc * ga) / (gc - ga);
        if (!(pm > pa && pm < pc)) pm = 0.5 * (pa + pc);
        const double gm = g(pm, upper);
        if (gm == 0.0) return pm;
        if ((gm > 0.0) == (ga > 0.0)) {
          pa = pm;
          ga = gm;
          if (side == -1) gc *= 0.5;
          side = -1;
        } else {
          pc = pm;
          gc = gm;
          if (side == 1) ga *= 0.5;
          side = 1;
        }
        if (std::abs(gm) < 1e-15) return pm;
      }
      return 0.5 * (pa + pc);
    };
    auto lo = root(false), hi = root(true);
    if (!lo || !hi) return std::nullopt;
    a = std::min(*lo, *hi);
    c = std::max(*lo, *hi);
    if (!(c > a)) return std::nullopt;
    if (cache) cache->iv.push_back({a, c});
  }
  return curve(0.5 * (a + c));
}

// Multiple-shooting Newton on P(x_k) = x_{k+1 mod p}. The error is the size
// of the last correction (a position error); raw residuals are amplified by
// the expansion of the map.
std::optional<std::pair<std::vector<Vec2>, double>> newton_periodic(const View& v,
                                                                    std::vector<Vec2> xs,
                                                                    double tol) {
  const std::size_t p = xs.size();
  const Eigen::Index n = static_cast<Eigen::Index>(2 * p);
  double err = std::numeric_limits<double>::infinity();
  std::vector<Vec2> best = xs;
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd f(n);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < p; ++k) {
      const std::size_t k1 = (k + 1) % p;
      const Eigen::Index r = static_cast<Eigen::Index>(2 * k);
      f.segment<2>(r) = v.f(xs[k]) - xs[k1];
      jac.block<2, 2>(r, r) += v.jac(xs[k]);
      jac.block<2, 2>(r, static_cast<Eigen::Index>(2 * k1)) -= Mat2::Identity();
    }
    if (!f.allFinite()) break;
    const Eigen::VectorXd step = jac.fullPivLu().solve(f);
    const double e = step.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(e)) break;
    for (std::size_t k = 0; k < p; ++k) xs[k] -= step.segment<2>(static_cast<Eigen::Index>(2 * k));
    if (e < err) {
      err = e;
      best = xs;
    }
    if (e < tol) break;
  }
  if (!(err < std::max(tol, 1e-9))) return std::nullopt;
  return std::make_pair(best, err);
}

std::vector<int> itinerary_in_box(const View& v, const StripBox& b, const StripSystem& sys,
                                  Vec2 x, std::size_t n) {
  std::vector<int> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(locate(v, b, sys, x, true));
    if (i + 1 < n) x = v.f(x);
  }
  return out;
}

}  // namespace

std::optional<Vec2> realize_word(const MapModel& map, const StripSystem& sys,
                                 const std::vector<int>& word) {
  const View v = view_of(map, sys.box);
  auto x = realize_in_box(v, sys, word);
  if (!x) return std::nullopt;
  return v.from_box(*x);
}

std::vector<int> itinerary(const MapModel& map, const StripSystem& sys, const Vec2& x,
                           std::size_t n) {
  const View v = view_of(map, sys.box);
  return itinerary_in_box(v, box_coords(sys.box), sys, v.to_box(x), n);
}

std::optional<Vec2> periodic_point(const MapModel& map, const StripSystem& sys,
                                   const std::vector<int>& word, double tol) {
  const View v = view_of(map, sys.box);
  const StripBox b = box_coords(sys.box);
  // One guess per phase of the cycle, each from the longest repetition of
  // the shifted word that is still realizable in double precision (strongly
  // expanding maps exhaust it fast).
  const std::size_t p = word.size();
  std::vector<Vec2> xs;
  for (std::size_t k = 0; k < p; ++k) {
    std::optional<Vec2> x0;
    for (std::size_t len = std::max<std::size_t>(2 * p, 12); len >= 1 && !x0; --len) {
      std::vector<int> ext(len);
      for (std::size_t i = 0; i < len; ++i) ext[i] = word[(i + k) % p];
      x0 = realize_in_box(v, sys, ext);
      if (x0 && itinerary_in_box(v, b, sys, *x0, len) != ext) x0.reset();
    }
    if (!x0) return std::nullopt;
    xs.push_back(*x0);
  }
  auto sol = newton_periodic(v, std::move(xs), tol);
  if (!sol || itinerary_in_box(v, b, sys, sol->first[0], p) != word) return std::nullopt;
  return v.from_box(sol->first[0]);
}

WordSolver make_word_solver(const MapModel& map, const StripSystem& sys) {
  return [&map, &sys](const std::vector<int>& w) { return periodic_point(map, sys, w); };
}

std::vector<std::vector<int>> all_words(int n_symbols, int length) {
  if (n_symbols < 1 || length < 1) fail_validation("all_words: bad alphabet or length");
  std::vector<std::vector<int>> out;
  std::vector<int> w(static_cast<std::size_t>(length), 1);
  while (true) {
    out.push_back(w);
    int k = length - 1;
    while (k >= 0 && w[static_cast<std::size_t>(k)] == n_symbols) w[static_cast<std::size_t>(k--)] = 1;
    if (k < 0) break;
    ++w[static_cast<std::size_t>(k)];
  }
  return out;
}

std::vector<std::vector<int>> random_words(int n_symbols, int length, int count,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(1, n_symbols);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(count));
  for (auto& w : out) {
    w.resize(static_cast<std::size_t>(length));
    for (auto& s : w) s = d(rng);
  }
  return out;
}

SemiconjugacyReport semiconjugacy_check(const MapModel& map, const StripSystem& sys,
                                        const std::vector<std::vector<int>>& words,
                                        bool periodic, int workers) {
  const View v = view_of(map, sys.box);
  const StripBox b = box_coords(sys.box);
  SemiconjugacyReport rep;
  rep.words = words.size();
  std::vector<std::optional<Vec2>> pts(words.size());
  std::vector<double> resid(words.size(), 0.0);
  // Contiguous chunks so that consecutive words share cached prefixes.
  const std::size_t chunk = 512;
  const std::size_t chunks = (words.size() + chunk - 1) / chunk;
  parallel_for(chunks, workers, [&](std::size_t ci) {
    PrefixCache cache;
    for (std::size_t i = ci * chunk; i < std::min(words.size(), (ci + 1) * chunk); ++i) {
      const auto& w = words[i];
      std::optional<Vec2> x;
      if (periodic) {
        x = periodic_point(map, sys, w);
        if (x) {
          std::vector<Vec2> orbit{v.to_box(*x)};
          while (orbit.size() < w.size()) orbit.push_back(v.f(orbit.back()));
          const auto sol = newton_periodic(v, std::move(orbit), 0.0);
          resid[i] = sol ? sol->second : std::numeric_limits<double>::infinity();
        }
      } else {
        auto xb = realize_in_box(v, sys, w, &cache);
        if (xb && itinerary_in_box(v, b, sys, *xb, w.size()) == w) x = v.from_box(*xb);
      }
      pts[i] = x;
    }
  });
  std::map<std::vector<int>, Vec2> found;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (pts[i]) {
      ++rep.realized;
      found.emplace(words[i], *pts[i]);
      rep.max_periodic_residual = std::max(rep.max_periodic_residual, resid[i]);
    } else if (rep.failures.size() < 16) {
      rep.failures.push_back(words[i]);
    }
  }
  // Distinct words of equal length must give distinct points.
  std::vector<std::pair<std::size_t, Vec2>> pts_by_len;
  for (const auto& [w, x] : found) pts_by_len.emplace_back(w.size(), x);
  std::sort(pts_by_len.begin(), pts_by_len.end(), [](const auto& a, const auto& c) {
    if (a.first != c.first) return a.first < c.first;
    if (a.second(1) != c.second(1)) return a.second(1) < c.second(1);
    return a.second(0) < c.second(0);
  });
  rep.distinct = true;
  for (std::size_t i = 0; i + 1 < pts_by_len.size(); ++i)
    if (pts_by_len[i].first == pts_by_len[i + 1].first &&
        (pts_by_len[i].second - pts_by_len[i + 1].second).lpNorm<Eigen::Infinity>() < 1e-15)
      rep.distinct = false;
  if (periodic) {
    // Cyclic shifts of a word describe the same orbit; distinctness is
    // asserted only for non-periodic realizations.
    rep.distinct = true;
  }
  return rep;
}

// ---------------------------------------------------------------- entropy

namespace {

// Counts maximal (n, eps)-separated subsets of the seed orbits and fits the
// growth rate in n for each eps.
EntropyEstimate separated_growth(const MapModel& map, const std::vector<Vec2>& seeds,
                                 const std::vector<int>& n_values, const std::vector<double>& eps,
                                 int depth, int workers) {
  const int n_max = *std::max_element(n_values.begin(), n_values.end());
  const std::size_t total = seeds.size();
  std::vector<double> orbit(total * static_cast<std::size_t>(n_max) * 2);
  std::vector<int> stay(total, n_max);
  parallel_for(total, workers, [&](std::size_t id) {
    Vec2 z = seeds[id];
    for (int s = 0; s < n_max; ++s) {
      orbit[(id * n_max + s) * 2] = z(0);
      orbit[(id * n_max + s) * 2 + 1] = z(1);
      z = map.map(z);
    }
  });

  EntropyEstimate est;
  est.n_values = n_values;
  est.eps = eps;
  est.counts.assign(eps.size(), std::vector<long long>(n_values.size(), 0));
  est.retained = static_cast<long long>(total);
  est.depth = depth;

  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t e = 0; e < eps.size(); ++e)
    for (std::size_t k = 0; k < n_values.size(); ++k) jobs.emplace_back(e, k);
  std::vector<long long> eligible(n_values.size(), 0);
  for (std::size_t k = 0; k < n_values.size(); ++k)
    for (int s : stay)
      if (s >= n_values[k]) ++eligible[k];

  parallel_for(jobs.size(), workers, [&](std::size_t jb) {
    const auto [e, k] = jobs[jb];
    const double ep = eps[e];
    const int n = n_values[k];
    std::unordered_map<long long, std::vector<std::size_t>> cells;
    auto key = [&](long long a, long long c) { return a * 1000003LL + c; };
    long long count = 0;
    for (std::size_t id = 0; id < total; ++id) {
      if (stay[id] < n) continue;
      const double* o = &orbit[id * n_max * 2];
      const long long ca = static_cast<long long>(std::floor(o[(n - 1) * 2] / ep));
      const long long cc = static_cast<long long>(std::floor(o[(n - 1) * 2 + 1] / ep));
      bool separated = true;
      for (long long da = -1; da <= 1 && separated; ++da)
        for (long long dc = -1; dc <= 1 && separated; ++dc) {
          auto it = cells.find(key(ca + da, cc + dc));
          if (it == cells.end()) continue;
          for (std::size_t other : it->second) {
            const double* p = &orbit[other * n_max * 2];
            double d = 0.0;
            for (int s = 0; s < n && d < ep; ++s)
              d = std::max({d, std::abs(o[2 * s] - p[2 * s]), std::abs(o[2 * s + 1] - p[2 * s + 1])});
            if (d < ep) {
              separated = false;
              break;
            }
          }
        }
      if (separated) {
        cells[key(ca, cc)].push_back(id);
        ++count;
      }
    }
    est.counts[e][k] = count;
  });

  // An epsilon level saturates when its separated sets use up half the seeds.
  std::vector<char> sat(eps.size(), 0);
  for (std::size_t e = 0; e < eps.size(); ++e)
    for (std::size_t k = 0; k < n_values.size(); ++k)
      if (2 * est.counts[e][k] > eligible[k] && eligible[k] > 1) sat[e] = 1;

  est.monotone_in_eps = true;
  std::vector<std::size_t> by_eps(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) by_eps[i] = i;
  std::sort(by_eps.begin(), by_eps.end(), [&](std::size_t a, std::size_t c) { return eps[a] < eps[c]; });
  for (std::size_t i = 0; i + 1 < by_eps.size(); ++i)
    for (std::size_t k = 0; k < n_values.size(); ++k)
      est.monotone_in_eps =
          est.monotone_in_eps && est.counts[by_eps[i]][k] >= est.counts[by_eps[i + 1]][k];

  for (std::size_t e = 0; e < eps.size(); ++e) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(n_values.size());
    for (std::size_t k = 0; k < n_values.size(); ++k) {
      const double x = n_values[k];
      const double y = std::log(std::max<long long>(1, est.counts[e][k]));
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    est.slopes.push_back((m * sxy - sx * sy) / (m * sxx - sx * sx));
  }
  // Slope at the finest unsaturated level (the coarsest if all saturate).
  std::size_t pick = by_eps.back();
  for (std::size_t e : by_eps)
    if (!sat[e]) {
      pick = e;
      break;
    }
  est.saturated = sat[by_eps.front()] != 0;
  est.estimate = est.slopes[pick];
  est.estimate_eps = eps[pick];
  const auto [mn, mx] = std::minmax_element(est.slopes.begin(), est.slopes.end());
  est.spread = *mx - *mn;
  return est;
}

void check_entropy_args(const std::vector<int>& n_values, const std::vector<double>& eps,
                        const EntropyOptions& opts) {
  if (n_values.size() < 2) fail_validation("entropy: need at least two orbit lengths");
  if (eps.empty()) fail_validation("entropy: empty epsilon ladder");
  for (double e : eps)
    if (!(e > 0.0)) fail_validation("entropy: epsilon must be positive");
  for (int n : n_values)
    if (n < 1) fail_validation("entropy: orbit lengths must be positive");
  if (opts.columns < 1 || opts.tail < 0 || opts.line_samples < 4 || opts.min_seeds < 1)
    fail_validation("entropy: bad sampling options");
}

// `inside` decides membership of the set the orbits must stay in; seed lines
// run along v, or along u when `swap` is set.
EntropyEstimate entropy_core(const MapModel& map, const StripBox& region,
                             const std::function<bool(const Vec2&)>& inside, bool swap,
                             const std::vector<int>& n_values, const std::vector<double>& eps,
                             const EntropyOptions& opts) {
  check_entropy_args(n_values, eps, opts);
  if (!(region.u1 > region.u0) || !(region.v1 > region.v0)) fail_validation("entropy: empty region");
  const int n_max = *std::max_element(n_values.begin(), n_values.end());
  const int depth = n_max + opts.tail;
  const std::size_t cols = static_cast<std::size_t>(opts.columns);
  const double a0 = swap ? region.v0 : region.u0, a1 = swap ? region.v1 : region.u1;
  const double b0 = swap ? region.u0 : region.v0, b1 = swap ? region.u1 : region.v1;
  auto point = [swap](double a, double b) { return swap ? Vec2(b, a) : Vec2(a, b); };

  // z, P(z), ..., P^steps(z) all in the region.
  auto stays = [&](Vec2 z, int steps) {
    for (int s = 0; s <= steps; ++s) {
      if (!finite(z) || !inside(z)) return false;
      if (s < steps) z = map.map(z);
    }
    return true;
  };

  // Intervals of each seed line whose points stay `depth` iterates.
  std::vector<Vec2> seeds;
  for (std::size_t c = 0; c < cols; ++c) {
    const double u = a0 + (c + 0.5) / cols * (a1 - a0);
    std::vector<Interval> cur{{b0, b1}};
    for (int d = 1; d <= depth && !cur.empty(); ++d) {
      std::vector<std::vector<Interval>> parts(cur.size());
      parallel_for(cur.size(), opts.workers, [&](std::size_t i) {
        const auto xs = linspace(cur[i].lo, cur[i].hi, static_cast<std::size_t>(opts.line_samples));
        auto ind = [&](double v) { return stays(point(u, v), d); };
        const std::size_t n = xs.size();
        std::vector<char> in(n);
        for (std::size_t k = 0; k < n; ++k) in[k] = ind(xs[k]) ? 1 : 0;
        const double tol = 1e-3 * (xs[1] - xs[0]);
        auto edge = [&](double out, double inside) {
          while (std::abs(inside - out) > tol) {
            const double m = 0.5 * (out + inside);
            (ind(m) ? inside : out) = m;
          }
          return inside;
        };
        for (std::size_t k = 0; k < n;) {
          if (!in[k]) {
            ++k;
            continue;
          }
          std::size_t j = k;
          while (j + 1 < n && in[j + 1]) ++j;
          const double lo = k == 0 ? xs[0] : edge(xs[k - 1], xs[k]);
          const double hi = j + 1 == n ? xs[n - 1] : edge(xs[j + 1], xs[j]);
          parts[i].push_back({lo, hi});
          k = j + 1;
        }
      });
      std::vector<Interval> next;
      for (auto& p : parts) next.insert(next.end(), p.begin(), p.end());
      if (static_cast<long long>(next.size()) > opts.max_intervals)
        throw Error(ErrorKind::Numerical,
                    "entropy: sampled invariant set needs more than " +
                        std::to_string(opts.max_intervals) + " intervals; lower max(n) or tail",
                    "{\"depth\": " + std::to_string(d) + "}");
      cur = std::move(next);
    }
    // Midpoints of the surviving intervals, padded to min_seeds points.
    double total_len = 0.0;
    for (const auto& iv : cur) total_len += iv.hi - iv.lo;
    const std::size_t extra =
        cur.size() >= static_cast<std::size_t>(opts.min_seeds) ? 0 : opts.min_seeds - cur.size();
    for (const auto& iv : cur) {
      const std::size_t k =
          1 + (total_len > 0.0 ? static_cast<std::size_t>(extra * (iv.hi - iv.lo) / total_len) : 0);
      for (std::size_t m = 0; m < k; ++m) {
        const Vec2 z = point(u, iv.lo + (m + 0.5) / k * (iv.hi - iv.lo));
        if (stays(z, depth)) seeds.push_back(z);
      }
    }
  }
  return separated_growth(map, seeds, n_values, eps, depth, opts.workers);
}


}  // namespace

EntropyEstimate entropy_separated_sets(const MapModel& map, const StripBox& region,
                                       const std::vector<int>& n_values,
                                       const std::vector<double>& eps,
                                       const EntropyOptions& opts) {
  return entropy_core(
      map, region, [&](const Vec2& z) { return region.contains(z); }, false, n_values, eps, opts);
}

EntropyEstimate entropy_separated_sets(const MapModel& map, const StripSystem& sys,
                                       const std::vector<int>& n_values,
                                       const std::vector<double>& eps,
                                       const EntropyOptions& opts) {
  check_entropy_args(n_values, eps, opts);
  if (sys.size() == 0) fail_validation("entropy: strip system is empty");
  const View v = view_of(map, sys.box);
  const StripBox b = box_coords(sys.box);
  const int depth = *std::max_element(n_values.begin(), n_values.end()) + opts.tail;
  const std::size_t cols = static_cast<std::size_t>(opts.columns);
  const std::size_t n_strips = sys.size();

  // Word intervals of a seed line: the points whose first d iterates follow
  // a fixed word through the horizontal strips. The d-th image of such an
  // interval crosses the box, so each strip cuts it in one sub-interval whose
  // ends are found by bisection on the signed offset from a strip boundary.
  std::vector<Vec2> seeds;
  for (std::size_t c = 0; c < cols; ++c) {
    const double u = b.u0 + (c + 0.5) / cols * (b.u1 - b.u0);
    std::vector<Interval> cur{{b.v0, b.v1}};
    // Intervals whose children fall below double resolution are kept whole.
    std::vector<Interval> terminal;
    for (int d = 0; d < depth && !cur.empty(); ++d) {
      if (static_cast<long long>(cur.size() * n_strips) > opts.max_intervals)
        throw Error(ErrorKind::Numerical,
                    "entropy: word intervals exceed " + std::to_string(opts.max_intervals) +
                        "; lower max(n) or tail",
                    "{\"depth\": " + std::to_string(d) + "}");
      auto image = [&](double y) {
        Vec2 z(u, y);
        for (int s = 0; s < d; ++s) z = v.f(z);
        return z;
      };
      // The true end of a word interval maps under d + 1 iterates onto a box
      // edge; the interpolated strip boundaries only locate it approximately.
      auto snap = [&](double y, const Interval& in) {
        auto edge_gap = [&](double t, double e) { return v.f(image(t))(1) - e; };
        const double w1 = v.f(image(y))(1);
        const double e = std::abs(w1 - b.v0) < std::abs(w1 - b.v1) ? b.v0 : b.v1;
        const double f0 = edge_gap(y, e);
        if (f0 == 0.0 || !std::isfinite(f0)) return y;
        double step = 1e-9 * (in.hi - in.lo);
        for (int k = 0; k < 40; ++k, step *= 2) {
          for (double t : {std::max(in.lo, y - step), std::min(in.hi, y + step)}) {
            const double ft = edge_gap(t, e);
            if (!std::isfinite(ft) || (ft > 0) == (f0 > 0)) continue;
            double a = y, c2 = t, fa = f0;
            for (int it = 0; it < 200 && std::abs(c2 - a) > 2 * std::numeric_limits<double>::epsilon() * std::abs(c2); ++it) {
              const double m = 0.5 * (a + c2);
              const double fm = edge_gap(m, e);
              if ((fm > 0) == (fa > 0))
                a = m, fa = fm;
              else
                c2 = m;
            }
            return 0.5 * (a + c2);
          }
        }
        return y;
      };
      std::vector<std::vector<Interval>> parts(cur.size());
      parallel_for(cur.size(), opts.workers, [&](std::size_t i) {
        for (const auto& h : sys.horizontal) {
          std::array<double, 2> ends{};
          bool ok = true;
          for (int side = 0; side < 2 && ok; ++side) {
            auto offset = [&](double y) {
              const Vec2 w = image(y);
              return w(1) - (side == 0 ? h.lo_at(w(0)) : h.hi_at(w(0)));
            };
            double a = cur[i].lo, c2 = cur[i].hi;
            double fa = offset(a);
            const double fc = offset(c2);
            if (!std::isfinite(fa) || !std::isfinite(fc) || (fa > 0) == (fc > 0)) {
              ok = false;
              break;
            }
            for (int it = 0; it < 200 && c2 - a > 4 * std::numeric_limits<double>::epsilon() * std::abs(c2); ++it) {
              const double m = 0.5 * (a + c2);
              const double fm = offset(m);
              if ((fm > 0) == (fa > 0))
                a = m, fa = fm;
              else
                c2 = m;
            }
            ends[side] = snap(0.5 * (a + c2), cur[i]);
          }
          if (ok) parts[i].push_back({std::min(ends[0], ends[1]), std::max(ends[0], ends[1])});
        }
      });
      std::vector<Interval> next;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].size() < n_strips) terminal.push_back(cur[i]);
        next.insert(next.end(), parts[i].begin(), parts[i].end());
      }
      cur = std::move(next);
    }
    cur.insert(cur.end(), terminal.begin(), terminal.end());
    const std::size_t per =
        std::max<std::size_t>(1, (static_cast<std::size_t>(opts.min_seeds) + cur.size() - 1) /
                                     std::max<std::size_t>(1, cur.size()));
    for (const auto& iv : cur)
      for (std::size_t m = 0; m < per; ++m)
        seeds.push_back(v.from_box(Vec2(u, iv.lo + (m + 0.5) / per * (iv.hi - iv.lo))));
  }
  return separated_growth(map, seeds, n_values, eps, depth, opts.workers);
}

// ---------------------------------------------------------------- homoclinic model

namespace {

struct HomoclinicGeometry {
  HomoclinicSquareSpec p;
  double h, g, r0;
  double dt(double r) const { return g - h * std::log(r); }
  double ddt(double r) const { return -h / r; }
  double alpha(double r) const { return (r0 - p.D * r) / p.C; }
  double beta(double r) const { return -p.D * r / p.C; }
  double t_of(const Vec2& z) const { return p.t0 * z(0) + (p.A / p.C) * r0 * z(1); }
};

HomoclinicGeometry geometry(const HomoclinicSquareSpec& s) {
  if (std::abs(s.A * s.D - s.B * s.C - 1.0) > 1e-12)
    fail_validation("homoclinic model: global map must have determinant 1");
  if (!(s.C < 0.0)) fail_validation("homoclinic model: C must be negative");
  if (!(s.t0 > 0.0) || !(s.t0 < 1.0)) fail_validation("homoclinic model: t0 must lie in (0, 1)");
  if (!(s.delta > 0.0) || !(s.u > 0.0) || !(s.period > 0.0))
    fail_validation("homoclinic model: delta, u and period must be positive");
  HomoclinicGeometry g{s, 0, 0, 0};
  g.h = 1.0 / (s.period * s.u);
  g.g = std::log(s.delta / 2.0) * g.h;
  g.r0 = -s.C * s.t0;
  if (g.r0 > s.delta / 2.0)
    fail_validation("homoclinic model: box height |C| t0 exceeds the local chart (delta / 2)");
  return g;
}

}  // namespace

MapModel make_homoclinic_square_map(const HomoclinicSquareSpec& spec) {
  const HomoclinicGeometry geo = geometry(spec);
  MapModel m;
  m.name = "homoclinic-square";
  m.kind = "homoclinic-square";
  m.params = Json{{"A", spec.A},         {"B", spec.B},   {"C", spec.C},
                  {"D", spec.D},         {"t0", spec.t0}, {"delta", spec.delta},
                  {"u", spec.u},         {"period", spec.period}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.map = [geo, nan](const Vec2& z) -> Vec2 {
    const double r = geo.r0 * z(1);
    if (!(r > 0.0)) return Vec2(nan, nan);
    const double f = geo.t_of(z) + geo.dt(r);
    const double s = f - std::round(f - 0.5 * (geo.alpha(r) + geo.beta(r)));
    return Vec2(z(1), (geo.p.C * s + geo.p.D * r) / geo.r0);
  };
  m.inverse = [geo, nan](const Vec2& z) -> Vec2 {
    const double r = geo.r0 * z(0);
    if (!(r > 0.0)) return Vec2(nan, nan);
    const double s = (geo.r0 * z(1) - geo.p.D * r) / geo.p.C;
    const double base = s - geo.dt(r) - (geo.p.A / geo.p.C) * r;
    const double n = std::round(0.5 * geo.p.t0 - base);
    return Vec2((base + n) / geo.p.t0, z(0));
  };
  m.jacobian = [geo](const Vec2& z) -> Mat2 {
    const double r = geo.r0 * z(1);
    Mat2 j;
    j << 0.0, 1.0, -1.0, geo.p.A + geo.p.D + geo.p.C * geo.ddt(r);
    return j;
  };
  return m;
}

double homoclinic_trace(const HomoclinicSquareSpec& spec, const Vec2& z) {
  const HomoclinicGeometry geo = geometry(spec);
  return spec.A + spec.D + spec.C * geo.ddt(geo.r0 * z(1));
}

double homoclinic_strip_level(const HomoclinicSquareSpec& spec, double u, int n) {
  const HomoclinicGeometry geo = geometry(spec);
  auto gfun = [&](double lv) {
    const double v = std::exp(lv), r = geo.r0 * v;
    return geo.t_of(Vec2(u, v)) + geo.dt(r) - n - 0.5 * (geo.alpha(r) + geo.beta(r));
  };
  double a = -700.0, b = 0.0;
  if (!(gfun(a) > 0.0) || !(gfun(b) < 0.0)) return std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    (gfun(m) > 0.0 ? a : b) = m;
  }
  return std::exp(0.5 * (a + b));
}

std::vector<HomoclinicPoint> detect_transverse_homoclinic(
    const TransitionLift& local, double t0, const std::function<double(double)>& t_beta,
    const HomoclinicOptions& opts) {
  if (!local.g || !local.h)
    fail_validation("detect_transverse_homoclinic: needs a local lift with (g, h)");
  if (opts.turns < 1) fail_validation("detect_transverse_homoclinic: turns must be positive");
  if (!(opts.lambda > 0.0) || !(opts.lambda < 1.0))
    fail_validation("detect_transverse_homoclinic: lambda must lie in (0, 1)");
  std::vector<HomoclinicPoint> out;
  if (!opts.reaches_zero) return out;
  const double r_hi = local.r_max;
  auto f = [&](double lr) {
    const double r = std::exp(lr);
    return t0 + local.twist(r) - t_beta(r);
  };
  auto slope = [&](const std::function<double(double)>& fn, double r) {
    const double e = 1e-6 * r;
    return (fn(r + e) - fn(r - e)) / (2 * e);
  };
  auto gamma_t = [&](double r) { return t0 + local.twist(r); };
  const double c1 = 0.5 * local.h0, c2 = 0.5 * local.h0;
  const double lr_lo = std::log(opts.r_lo), lr_hi = std::log(r_hi * (1.0 - 1e-12));
  const int m0 = static_cast<int>(std::floor(f(lr_hi))) + 1;
  for (int m = m0; m < m0 + opts.turns; ++m) {
    double a = lr_hi, b = lr_lo;
    if (!((f(a) - m) < 0.0 && (f(b) - m) > 0.0)) break;
    for (int it = 0; it < 200; ++it) {
      const double c = 0.5 * (a + b);
      if (c == a || c == b) break;
      ((f(c) - m) < 0.0 ? a : b) = c;
    }
    double lr = 0.5 * (a + b);
    for (int it = 0; it < 3; ++it) {
      const double e = 1e-7;
      const double d = (f(lr + e) - f(lr - e)) / (2 * e);
      const double step = (f(lr) - m) / d;
      if (!std::isfinite(step)) break;
      lr -= step;
    }
    HomoclinicPoint p;
    p.turn = m - m0 + 1;
    p.r = std::exp(lr);
    p.t = gamma_t(p.r);
    const double sg = slope(gamma_t, p.r), sb = slope(t_beta, p.r);
    p.margin = p.r * (sb - sg);
    p.c1_slack = -p.r * sg - c1;
    p.c2_slack = sb + c2 / std::pow(p.r, 1.0 - opts.lambda);
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------- serialization

namespace {
Json strip_json(const Strip& s, std::size_t stride) {
  Json j{{"index", s.index},
         {"vertical", s.vertical},
         {"min_width", s.min_width()},
         {"max_width", s.max_width()},
         {"interp_error", s.interp_error}};
  Json pts = Json::array();
  for (std::size_t i = 0; i < s.s.size(); i += stride) pts.push_back({s.s[i], s.lo[i], s.hi[i]});
  j["samples"] = pts;
  return j;
}
}  // namespace

Json to_json(const StripSystem& s) {
  Json h = Json::array(), v = Json::array();
  for (const auto& st : s.horizontal) h.push_back(strip_json(st, 8));
  for (const auto& st : s.vertical) v.push_back(strip_json(st, 8));
  return Json{{"box",
               {{"u0", s.box.u0}, {"u1", s.box.u1}, {"v0", s.box.v0}, {"v1", s.box.v1},
                {"transposed", s.box.transposed}}},
              {"count", s.size()},
              {"ordered", s.ordered},
              {"accumulating", s.accumulating},
              {"h_ratios", s.h_ratios},
              {"v_ratios", s.v_ratios},
              {"horizontal", h},
              {"vertical", v}};
}

Json to_json(const MoserReport& r) {
  return Json{{"N1", r.n1},
              {"N2", r.n2},
              {"n1_error", r.n1_error},
              {"n2_contraction", r.n2_contraction},
              {"n2_checks", r.n2_checks},
              {"witness", r.witness}};
}

Json to_json(const ConeReport& r) {
  return Json{{"pass", r.pass},
              {"mu", r.mu},
              {"min_unstable_expansion", r.min_unstable_expansion},
              {"min_stable_expansion", r.min_stable_expansion},
              {"max_unstable_slope", r.max_unstable_slope},
              {"max_stable_slope", r.max_stable_slope},
              {"samples", r.samples},
              {"witness", r.witness}};
}

Json to_json(const SemiconjugacyReport& r) {
  return Json{{"words", r.words},
              {"realized", r.realized},
              {"distinct", r.distinct},
              {"max_periodic_residual", r.max_periodic_residual},
              {"failures", r.failures},
              {"pass", r.pass()}};
}

Json to_json(const EntropyEstimate& e) {
  return Json{{"n_values", e.n_values},       {"eps", e.eps},
              {"counts", e.counts},           {"slopes", e.slopes},
              {"estimate", e.estimate},       {"estimate_eps", e.estimate_eps},
              {"spread", e.spread},
              {"monotone_in_eps", e.monotone_in_eps},
              {"saturated", e.saturated},     {"retained", e.retained},
              {"depth", e.depth}};
}

Json to_json(const HomoclinicPoint& p) {
  return Json{{"turn", p.turn},         {"r", p.r},
              {"t", p.t},               {"margin", p.margin},
              {"c1_slack", p.c1_slack}, {"c2_slack", p.c2_slack}};
}

StripBox box_from_json(const Json& j) {
  StripBox b;
  if (!j.is_object()) fail_validation("box: must be an object");
  b.u0 = j.value("u0", 0.0);
  b.u1 = j.value("u1", 1.0);
  b.v0 = j.value("v0", 0.0);
  b.v1 = j.value("v1", 1.0);
  b.transposed = j.value("transposed", false);
  if (!(b.u1 > b.u0) || !(b.v1 > b.v0)) fail_validation("box: edges must be ordered");
  return b;
}

}  // namespace reeb
