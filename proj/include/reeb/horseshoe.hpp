#pragma once

#include "reeb/transition.hpp"

namespace reeb {

/// Quadrilateral in map coordinates with horizontal edges H0 (v = v0, the
/// accumulation edge H-infinity side) and vertical edges, V-infinity at u0.
/// `transposed` exchanges the roles of the two coordinates.
struct StripBox {
  double u0 = 0.0, u1 = 1.0, v0 = 0.0, v1 = 1.0;
  bool transposed = false;
  bool contains(const Vec2& z) const {
    return z(0) >= u0 && z(0) <= u1 && z(1) >= v0 && z(1) <= v1;
  }
};

/// Strip sampled along its crossing direction: for a vertical strip `s` is
/// v and (lo, hi) are the left/right u boundaries; for a horizontal strip
/// `s` is u and (lo, hi) the bottom/top v boundaries.
struct Strip {
  int index = 0;
  bool vertical = true;
  std::vector<double> s, lo, hi;
  double interp_error = 0.0;

  double lo_at(double x) const;
  double hi_at(double x) const;
  double center_at(double x) const { return 0.5 * (lo_at(x) + hi_at(x)); }
  double min_width() const;
  double max_width() const;
};

struct StripSystem {
  StripBox box;
  std::vector<Strip> horizontal;  // 1 = topmost
  std::vector<Strip> vertical;    // 1 = rightmost
  bool ordered = false;
  bool accumulating = false;
  std::vector<double> h_ratios, v_ratios;  // successive distance ratios to the edge

  std::size_t size() const { return std::min(horizontal.size(), vertical.size()); }
};

struct StripOptions {
  int lines = 257;          // rows (vertical) / columns (horizontal)
  int uniform = 2001;       // uniform samples per line
  int geometric = 600;      // geometric samples toward the accumulation edge
  double geometric_floor = 1e-12;
  int workers = 1;
};

StripSystem detect_strips(const MapModel& map, const StripBox& box, int n_max,
                          const StripOptions& opts = {});

/// Index (1-based) of the vertical / horizontal strip containing z, 0 if none.
int vertical_index(const MapModel& map, const StripSystem& sys, const Vec2& z);
int horizontal_index(const MapModel& map, const StripSystem& sys, const Vec2& z);

struct MoserReport {
  bool n1 = false;
  bool n2 = false;
  double n1_error = 0.0;
  double n2_contraction = 0.0;  // max width ratio of image sub-strips
  std::size_t n2_checks = 0;
  std::string witness;
};

MoserReport verify_moser_conditions(const MapModel& map, const StripSystem& sys,
                                    double tol = 1e-8, int substrips = 4,
                                    std::uint64_t seed = 7);

struct ConeReport {
  bool pass = false;
  double mu = 0.0;
  double min_unstable_expansion = 0.0;
  double min_stable_expansion = 0.0;
  double max_unstable_slope = 0.0;  // max |xi'/zeta'| of the image cone
  double max_stable_slope = 0.0;
  std::size_t samples = 0;
  std::string witness;
};

ConeReport cone_certificate(const MapModel& map, const StripSystem& sys, double mu,
                            int per_strip = 64);

/// Point whose forward itinerary through the vertical strips is `word`
/// (P^i(x) in V_{word[i]}), by nested bisection along the centre of V_{word[0]}.
std::optional<Vec2> realize_word(const MapModel& map, const StripSystem& sys,
                                 const std::vector<int>& word);
/// Periodic point of the word, polished with Newton; nothing if it fails.
std::optional<Vec2> periodic_point(const MapModel& map, const StripSystem& sys,
                                   const std::vector<int>& word, double tol = 1e-12);
std::vector<int> itinerary(const MapModel& map, const StripSystem& sys, const Vec2& x,
                           std::size_t n);
WordSolver make_word_solver(const MapModel& map, const StripSystem& sys);

struct SemiconjugacyReport {
  std::size_t words = 0;
  std::size_t realized = 0;
  bool distinct = false;
  double max_periodic_residual = 0.0;
  std::vector<std::vector<int>> failures;
  bool pass() const { return realized == words && distinct && failures.empty(); }
};

/// Checks every listed word; periodic ones additionally get a Newton-polished
/// periodic point whose closure residual is reported.
SemiconjugacyReport semiconjugacy_check(const MapModel& map, const StripSystem& sys,
                                        const std::vector<std::vector<int>>& words,
                                        bool periodic = false, int workers = 1);
std::vector<std::vector<int>> all_words(int n_symbols, int length);
std::vector<std::vector<int>> random_words(int n_symbols, int length, int count,
                                           std::uint64_t seed);

struct EntropyOptions {
  int columns = 1;             // vertical seed lines across the region
  int tail = 4;                // extra forward iterates required of every seed
  int line_samples = 48;       // samples per surviving interval when refining
  int min_seeds = 256;         // per column
  long long max_intervals = 4000000;
  int workers = 1;
};

struct EntropyEstimate {
  std::vector<int> n_values;
  std::vector<double> eps;
  std::vector<std::vector<long long>> counts;  // [eps][n]
  std::vector<double> slopes;                  // per eps
  double estimate = 0.0;
  double estimate_eps = 0.0;  // finest epsilon whose sets do not saturate the seeds
  double spread = 0.0;
  bool monotone_in_eps = false;
  bool saturated = false;
  long long retained = 0;  // seeds on the sampled invariant set
  int depth = 0;           // forward iterates every seed stays in the region
};

/// Growth rate of (n, eps)-separated sets of orbit segments that stay in the
/// region, on the unit-time suspension of the map. Seeds sample the set of
/// points of each seed line that stay max(n) + tail iterates in the region,
/// refined interval by interval one iterate at a time.
EntropyEstimate entropy_separated_sets(const MapModel& map, const StripBox& region,
                                       const std::vector<int>& n_values,
                                       const std::vector<double>& eps,
                                       const EntropyOptions& opts = {});
/// Same, restricted to orbits that follow words in the detected horizontal
/// strips, so a countable family is cut at its detected depth. Seeds come
/// from the word intervals of each seed line, found by bisection.
EntropyEstimate entropy_separated_sets(const MapModel& map, const StripSystem& sys,
                                       const std::vector<int>& n_values,
                                       const std::vector<double>& eps,
                                       const EntropyOptions& opts = {});

// ---------------------------------------------------------------- homoclinic model

/// Return map near a transverse homoclinic point: linear global map G with
/// det 1 and C < 0 after the local twist (t, r) -> (t + dt(r), r), written in
/// coordinates (u, v) of the box Q0 so that u' = v.
struct HomoclinicSquareSpec {
  double A = 0.5, B = 0.4, C = -2.0, D = 0.4;
  double t0 = 0.05;
  double delta = 0.5;
  double u = 1.0;       // constant local rate
  double period = 1.0;
};

MapModel make_homoclinic_square_map(const HomoclinicSquareSpec& spec);
/// v-coordinate of the centre of the horizontal strip with twist level n at
/// column u (before relabelling).
double homoclinic_strip_level(const HomoclinicSquareSpec& spec, double u, int n);
/// Trace of DP at (u, v): A + D + C r0 dt'(r).
double homoclinic_trace(const HomoclinicSquareSpec& spec, const Vec2& z);

struct HomoclinicPoint {
  int turn = 0;
  double r = 0.0;
  double t = 0.0;
  double margin = 0.0;      // r (t'_beta - t'_gamma) > 0 for a transverse crossing
  double c1_slack = 0.0;    // -r t'_gamma - c1 > 0
  double c2_slack = 0.0;    // t'_beta + c2 / r^(1 - lambda) > 0
};

struct HomoclinicOptions {
  double r_lo = 1e-14;       // end of the arc; must be ~0 for the spiral
  bool reaches_zero = true;
  int turns = 10;
  double lambda = 0.5;
};

/// Intersections of the lifted image of the entry arc t = t0 with the exit
/// arc t = t_beta(r) + m, m integer (the spiral of the local passage).
std::vector<HomoclinicPoint> detect_transverse_homoclinic(
    const TransitionLift& local, double t0, const std::function<double(double)>& t_beta,
    const HomoclinicOptions& opts = {});

Json to_json(const StripSystem& s);
Json to_json(const MoserReport& r);
Json to_json(const ConeReport& r);
Json to_json(const SemiconjugacyReport& r);
Json to_json(const EntropyEstimate& e);
Json to_json(const HomoclinicPoint& p);
StripBox box_from_json(const Json& j);

}  // namespace reeb
