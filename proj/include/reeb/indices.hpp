#pragma once

#include "reeb/orbits.hpp"

#include <optional>

namespace reeb {

struct Eigenpair {
  double value = 0.0;
  int winding = 0;
  bool winding_valid = true;
  double min_modulus_ratio = 1.0;
  std::vector<Vec2> eigenfunction;  // frame coordinates at the grid points
};

struct AsymptoticSpectrum {
  std::string orbit_ref;
  std::string frame_id;
  double period = 0.0;
  int grid = 0;
  int refined_grid = 0;
  std::vector<Eigenpair> eigenpairs;  // window nearest 0, sorted by value
  std::vector<double> refined_values;
  double refinement_change = 0.0;
  bool refinement_converged = false;
  bool winding_monotone = false;
  bool winding_pairs = false;
  std::vector<Mat2> generator;  // transverse generator G(t_j) (traceless)
};

struct SpectrumOptions {
  int grid = 255;             // odd number of collocation points
  int window = 40;            // eigenvalues kept nearest 0
  bool refine = true;         // also solve on 2n+1 points
  double min_modulus = 1e-6;  // eigenfunction rejection ratio
  // Constant symplectic change of frame P; the operator is built with the
  // compatible structure P J P^-1. Used to test J-independence.
  Mat2 conjugation = Mat2::Identity();
  IntegrateOptions integrate;
};

/// Spectrum of the Fourier-collocated operator -J d/dt - S(t) from a
/// sampled transverse generator over one period.
AsymptoticSpectrum spectrum_from_generator(const std::function<Mat2(double)>& generator,
                                           double period, const SpectrumOptions& opts = {});

/// Transverse generator of the linearized flow in the model frame along the
/// orbit at time t, modulo the flow direction.
std::function<Mat2(double)> transverse_generator(const FlowModel& model,
                                                 const PeriodicOrbit& orbit,
                                                 const IntegrateOptions& io = {});

AsymptoticSpectrum asymptotic_spectrum(const PeriodicOrbit& orbit, const FlowModel& model,
                                       const SpectrumOptions& opts = {});

struct CzResult {
  int index = 0;
  int wind_negative = 0;
  int wind_nonnegative = 0;
  double largest_negative = 0.0;
  double smallest_nonnegative = 0.0;
  bool degenerate = false;
};

CzResult cz_index(const AsymptoticSpectrum& spec, double tol_spec = 1e-6);

using Loop = std::vector<Eigen::Vector3d>;

enum class LinkMethod { Gauss, Crossings };

struct LinkRecord {
  int linking = 0;
  double gauss_value = 0.0;
  int crossings_value = 0;
  bool methods_agree = true;
  double min_distance = 0.0;
  double rounding_error = 0.0;
};

/// Linking number of two closed polylines (last point joins the first).
LinkRecord linking_number(const Loop& a, const Loop& b, double tol_sep = 1e-9);

/// Exact sum of segment-pair solid angles divided by 4 pi.
double gauss_linking(const Loop& a, const Loop& b);
/// Half the signed crossing count in a fixed generic projection.
int crossing_linking(const Loop& a, const Loop& b);
double loop_distance(const Loop& a, const Loop& b);

/// Chart from the phase space of a model into R^3 with an orientation sign.
struct LoopChart {
  std::string id;
  std::function<Eigen::Vector3d(const Vec&)> map;
  int orientation = 1;
};

/// Stereographic projection of a star-shaped level in R^4 from the point
/// (0,0,0,-|z|) after radial normalisation; orientation chosen so that two
/// fibres of the standard Reeb flow link +1.
LoopChart stereographic_chart();
/// Neck chart around the Henon-Heiles saddle-center (0,1).
LoopChart henon_heiles_neck_chart(double kappa = 4.0);

struct SelfLinkResult {
  int self_linking = 0;
  double offset = 0.0;
  LinkRecord link;
  std::string chart_id;
  double min_transversality = 0.0;
};

/// Push-off along the first frame vector, linked with the loop in the chart.
SelfLinkResult self_linking(const FlowModel& model, const std::vector<Vec>& loop,
                            const LoopChart& chart, double offset = 1e-3);

Json to_json(const AsymptoticSpectrum& s);
Json to_json(const CzResult& c);
Json to_json(const LinkRecord& l);

}  // namespace reeb
