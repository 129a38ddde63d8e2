#pragma once
// JSON (canonical) and CSV (plot-ready) serialization for specs, tables,
// reports, and simulation results. JSON objects keep insertion order and
// doubles round-trip exactly, so outputs are byte-stable for a fixed config.

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "occlab/asymptotics.hpp"
#include "occlab/depoisson.hpp"
#include "occlab/frequencies.hpp"
#include "occlab/gaussian.hpp"
#include "occlab/moments.hpp"
#include "occlab/sampling.hpp"

namespace occlab {

using Json = nlohmann::ordered_json;

Json spec_to_json(const FrequencySpec& spec);
FrequencySpec spec_from_json(const Json& j);

Json to_json(const MomentValue& v);
Json to_json(const MomentTable& table);
Json to_json(const CovMatrix& m);
Json to_json(const DepoissonBound& b);
Json to_json(const RegimeReport& r);
Json to_json(const AlphaEstimate& a);
Json to_json(const LimitCovariance& s);
Json to_json(const SigmaScan& s);
Json to_json(const SimResult& s);
Json to_json(const BentkusBound& b);
Json to_json(const NormalityReport& r);

const char* regime_name(RegimeVerdict v);
const char* scan_verdict_name(ScanVerdict v);
const char* trend_name(RatioTrend t);

/// Shortest-width exact decimal for a double ("%.17g"-based, trimmed).
std::string format_double(double v);

// CSV emitters; `header` lines (version and resolved config) are prefixed
// as `# ...` comments.
void write_moment_csv(std::ostream& os, const MomentTable& table, const Json& header);
void write_sigma_csv(std::ostream& os, const SigmaScan& scan, const Json& header);
void write_series_csv(std::ostream& os, const std::vector<double>& t,
                      const std::vector<std::pair<std::string, std::vector<double>>>& columns,
                      const Json& header);
void write_replicates_csv(std::ostream& os, const std::vector<CountVector>& replicates,
                          const Json& header);

}  // namespace occlab
