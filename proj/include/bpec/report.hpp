#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "bpec/montecarlo.hpp"
#include "bpec/rate_analysis.hpp"
#include "json.hpp"

namespace bpec {

/// 12 significant digits, '.' separator, independent of the C++ locale.
std::string format_number(double v);

/// Parses "0.75", "1e-3" or a ratio such as "32/35".
double parse_ratio(std::string_view text);

/// start:stop:step with 0 <= start <= stop <= 1 and step > 0.
struct EtaGrid {
  double start = 0.0;
  double stop = 1.0;
  double step = 0.01;

  [[nodiscard]] std::vector<double> points() const;
};
EtaGrid parse_eta_grid(std::string_view text);

inline constexpr std::string_view kSweepHeader =
    "eta,outer_sum,c1_sum,c2_sum,c3_sum,inter_modal_sum,intra_modal_sum,no_feedback_sum";

struct SweepRow {
  double eta = 0.0;
  double outer_sum = 0.0;
  double c1_sum = 0.0;
  double c2_sum = 0.0;
  double c3_sum = 0.0;
  std::optional<double> inter_modal_sum;  // absent when delta_a < delta_b
  double intra_modal_sum = 0.0;
  double no_feedback_sum = 0.0;
};

SweepRow sweep_row(double delta_a, double delta_b, double eta);
std::vector<SweepRow> sweep(double delta_a, double delta_b, const std::vector<double>& etas);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// "c1", "c2" or "c3": the region whose own maximal sum-rate is smallest.
/// Ties resolve to the lower index.
std::string binding_region(const SweepRow& row);

nlohmann::ordered_json region_report(const ModeParams& p);
std::string region_text(const ModeParams& p);

enum class Figure { Fig3, Fig4, Fig5 };
Figure parse_figure(std::string_view name);
void write_figure_csv(Figure figure, std::ostream& os);

inline constexpr std::string_view kRegionComparisonHeader = "series,r1,r2,sum";

nlohmann::ordered_json simulation_report(const SimulationConfig& config,
                                         const AggregateStats& stats);

}  // namespace bpec
