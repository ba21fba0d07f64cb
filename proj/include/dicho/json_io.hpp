#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "dicho/cocycle.hpp"
#include "dicho/dichotomy.hpp"
#include "dicho/dynamics.hpp"
#include "dicho/perron.hpp"
#include "dicho/shadowing.hpp"
#include "dicho/weighted.hpp"

namespace dicho {

using nlohmann::json;

/// Shortest round-trip decimal representation of an IEEE-754 double.
std::string format_double(double x);

// --- value schemas -------------------------------------------------------
// cocycle:   {"dim": int, "window": [lo, hi], "maps": [[row-major d*d], ...]}
// sequence:  {"window": [lo, hi], "omega": real, "vectors": [[reals], ...]}
// splitting: {"window": [lo, hi], "K": real, "lambda": real,
//             "projections": [[row-major d*d], ...]}
// map:       {"kind": "cat"|"linear"|"perturbed_cat", "matrix": [[int]],
//             "epsilon": real}

json cocycle_to_json(const LinearCocycle& c);
LinearCocycle cocycle_from_json(const json& j);

json seq_to_json(const WeightedSeq& s);
WeightedSeq seq_from_json(const json& j);

json splitting_to_json(const DichotomySplitting& s);
DichotomySplitting splitting_from_json(const json& j);

json map_to_json(const TorusMap& m);
TorusMap map_from_json(const json& j);

// --- report serializers ---------------------------------------------------

json report_to_json(const DichotomyReport& r);
json report_to_json(const GreenBoundsReport& r);
json report_to_json(const PerronSolution& s);
json report_to_json(const SeriesConstant& s);
json report_to_json(const ShadowFixResult& r, double L_times_d);
json report_to_json(const ShadowingOutcome& o);
json report_to_json(const ShadowVerifyReport& r);
json report_to_json(const AdmissibilityReport& r);

// --- CSV emitters (shortest round-trip decimals, deterministic) -----------

/// columns: k, x_1..x_d, weight, weighted_mag
void write_seq_csv(std::ostream& os, const WeightedSeq& s);

/// columns: k, s, measured, envelope, ratio
void write_pair_scan_csv(std::ostream& os, const LinearCocycle& c,
                         const DichotomySplitting& s, double omega, double mu,
                         double r, int jobs = 1);

/// columns: k, x1, x2, dist, envelope, ratio
void write_outcome_csv(std::ostream& os, const PseudoOrbit& po,
                       const ShadowingOutcome& out);

}  // namespace dicho
