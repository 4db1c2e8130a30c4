#include "bpec/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bpec {
namespace {

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

nlohmann::ordered_json halfspace_rows(const RateRegion& r) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& h : r.halfspaces()) rows.push_back({h.c1, h.c2, h.bound});
  return rows;
}

void print_region(std::ostringstream& os, std::string_view name, const RateRegion& r) {
  os << name << ":\n";
  for (const auto& h : r.halfspaces()) {
    os << "  " << format_number(h.c1) << "*R1 + " << format_number(h.c2)
       << "*R2 <= " << format_number(h.bound) << "\n";
  }
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";  // also folds -0
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 12);
  return std::string(buf.data(), res.ptr);
}

double parse_ratio(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_double(text);
  const double num = parse_double(text.substr(0, slash));
  const double den = parse_double(text.substr(slash + 1));
  if (den == 0.0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  return num / den;
}

std::vector<double> EtaGrid::points() const {
  const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    out.push_back(std::min(stop, start + static_cast<double>(k) * step));
  }
  return out;
}

EtaGrid parse_eta_grid(std::string_view text) {
  const auto a = text.find(':');
  const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
  if (a == std::string_view::npos || b == std::string_view::npos ||
      text.find(':', b + 1) != std::string_view::npos) {
    throw std::invalid_argument("eta grid must look like start:stop:step");
  }
  EtaGrid g{parse_ratio(text.substr(0, a)), parse_ratio(text.substr(a + 1, b - a - 1)),
            parse_ratio(text.substr(b + 1))};
  if (!(g.start >= 0.0 && g.start <= g.stop && g.stop <= 1.0) || !(g.step > 0.0)) {
    throw std::invalid_argument("eta grid needs 0 <= start <= stop <= 1 and step > 0");
  }
  return g;
}

SweepRow sweep_row(double delta_a, double delta_b, double eta) {
  const ModeParams p{delta_a, delta_b, eta};
  SweepRow row;
  row.eta = eta;
  row.outer_sum = max_sum_rate(outer_region(p));
  row.c1_sum = max_sum_rate(region_c1(p));
  row.c2_sum = max_sum_rate(region_c2(p));
  row.c3_sum = max_sum_rate(region_c3(p));
  if (delta_a >= delta_b && delta_b < 1.0) row.inter_modal_sum = achievable_intermodal_sum(p);
  row.intra_modal_sum = achievable_intramodal_sum(p);
  row.no_feedback_sum = achievable_nofeedback_sum(p);
  return row;
}

std::vector<SweepRow> sweep(double delta_a, double delta_b, const std::vector<double>& etas) {
  std::vector<SweepRow> rows;
  rows.reserve(etas.size());
  for (const double eta : etas) rows.push_back(sweep_row(delta_a, delta_b, eta));
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepHeader << '\n';
  for (const auto& r : rows) {
    os << format_number(r.eta) << ',' << format_number(r.outer_sum) << ','
       << format_number(r.c1_sum) << ',' << format_number(r.c2_sum) << ','
       << format_number(r.c3_sum) << ','
       << (r.inter_modal_sum ? format_number(*r.inter_modal_sum) : std::string{}) << ','
       << format_number(r.intra_modal_sum) << ',' << format_number(r.no_feedback_sum)
       << '\n';
  }
}

std::string binding_region(const SweepRow& row) {
  const std::array<double, 3> sums{row.c1_sum, row.c2_sum, row.c3_sum};
  const auto best = *std::min_element(sums.begin(), sums.end());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (sums[i] <= best + 1e-12) return "c" + std::to_string(i + 1);
  }
  return "c1";
}

nlohmann::ordered_json region_report(const ModeParams& p) {
  validate(p);
  const auto outer = outer_region(p);
  const auto row = sweep_row(p.delta_a, p.delta_b, p.eta);

  nlohmann::ordered_json j;
  j["delta_a"] = p.delta_a;
  j["delta_b"] = p.delta_b;
  j["eta"] = p.eta;
  j["avg_erasure"] = avg_erasure(p);
  j["kappa"] = kappa(p);
  j["c1_halfspaces"] = halfspace_rows(region_c1(p));
  j["c2_halfspaces"] = halfspace_rows(region_c2(p));
  j["c3_halfspaces"] = halfspace_rows(region_c3(p));
  auto verts = nlohmann::ordered_json::array();
  for (const auto& v : vertices(outer)) verts.push_back({v.r1, v.r2});
  j["vertices"] = verts;
  j["max_sum_rate"] = row.outer_sum;
  j["c1_sum"] = row.c1_sum;
  j["c2_sum"] = row.c2_sum;
  j["c3_sum"] = row.c3_sum;
  j["binding_region"] = binding_region(row);
  j["thm2_holds"] = thm2_holds(p);
  if (p.delta_b < 1.0) {
    j["thm2_threshold"] = thm2_threshold(p.delta_a, p.delta_b);
  } else {
    j["thm2_threshold"] = nullptr;
  }
  if (p.delta_a < 1.0) {
    j["alpha_star"] = alpha_star(p);
  } else {
    j["alpha_star"] = nullptr;
  }
  if (row.inter_modal_sum) {
    j["inter_modal_sum"] = *row.inter_modal_sum;
  } else {
    j["inter_modal_sum"] = nullptr;
  }
  j["intra_modal_sum"] = row.intra_modal_sum;
  j["no_feedback_sum"] = row.no_feedback_sum;
  return j;
}

std::string region_text(const ModeParams& p) {
  validate(p);
  const auto outer = outer_region(p);
  const auto row = sweep_row(p.delta_a, p.delta_b, p.eta);
  std::ostringstream os;
  os << "delta_a = " << format_number(p.delta_a) << ", delta_b = " << format_number(p.delta_b)
     << ", eta = " << format_number(p.eta) << "\n";
  os << "avg erasure = " << format_number(avg_erasure(p))
     << ", kappa = " << format_number(kappa(p)) << "\n";
  print_region(os, "C1", region_c1(p));
  print_region(os, "C2", region_c2(p));
  print_region(os, "C3", region_c3(p));
  os << "outer vertices:";
  for (const auto& v : vertices(outer)) {
    os << " (" << format_number(v.r1) << ", " << format_number(v.r2) << ")";
  }
  os << "\n";
  os << "max sum-rate = " << format_number(row.outer_sum) << " (binding: "
     << binding_region(row) << "; c1 " << format_number(row.c1_sum) << ", c2 "
     << format_number(row.c2_sum) << ", c3 " << format_number(row.c3_sum) << ")\n";
  os << "thm2 holds = " << (thm2_holds(p) ? "true" : "false");
  if (p.delta_b < 1.0) os << " (eta threshold " << format_number(thm2_threshold(p.delta_a, p.delta_b)) << ")";
  os << "\n";
  os << "inter-modal sum = "
     << (row.inter_modal_sum ? format_number(*row.inter_modal_sum) : std::string("unsupported"))
     << "\n";
  os << "intra-modal sum = " << format_number(row.intra_modal_sum) << "\n";
  os << "no-feedback sum = " << format_number(row.no_feedback_sum) << "\n";
  return os.str();
}

Figure parse_figure(std::string_view name) {
  if (name == "fig3") return Figure::Fig3;
  if (name == "fig4") return Figure::Fig4;
  if (name == "fig5") return Figure::Fig5;
  throw std::invalid_argument("unknown figure '" + std::string(name) +
                              "' (expected fig3, fig4 or fig5)");
}

void write_figure_csv(Figure figure, std::ostream& os) {
  const auto grid = EtaGrid{0.0, 1.0, 0.01}.points();
  switch (figure) {
    case Figure::Fig3: {
      auto etas = grid;
      // Include the point where the outer bound first becomes achievable.
      const double threshold = thm2_threshold(0.75, 0.0);
      etas.insert(std::upper_bound(etas.begin(), etas.end(), threshold), threshold);
      write_sweep_csv(os, sweep(0.75, 0.0, etas));
      return;
    }
    case Figure::Fig4:
      write_sweep_csv(os, sweep(0.75, 0.125, grid));
      return;
    case Figure::Fig5: {
      const ModeParams p{0.75, 0.0, 1.0 / 6.0};
      os << kRegionComparisonHeader << '\n';
      for (const auto& v : vertices(outer_region(p))) {
        os << "outer_vertex," << format_number(v.r1) << ',' << format_number(v.r2) << ','
           << format_number(v.r1 + v.r2) << '\n';
      }
      auto point = [&](std::string_view name, double sum) {
        os << name << ',' << format_number(sum / 2.0) << ',' << format_number(sum / 2.0)
           << ',' << format_number(sum) << '\n';
      };
      point("outer_symmetric", max_sum_rate(outer_region(p)));
      point("inter_modal", achievable_intermodal_sum(p));
      point("intra_modal", achievable_intramodal_sum(p));
      point("no_feedback", achievable_nofeedback_sum(p));
      return;
    }
  }
}

nlohmann::ordered_json simulation_report(const SimulationConfig& config,
                                         const AggregateStats& stats) {
  const auto& p = config.params;
  const auto plan = plan_scheme(p, config.n, config.scheme, config.guard_coeff);
  nlohmann::ordered_json j;
  j["delta_a"] = p.delta_a;
  j["delta_b"] = p.delta_b;
  j["delta_t"] = config.transient_erasure();
  j["eta"] = p.eta;
  j["n"] = config.n;
  j["n_t"] = config.transient_length();
  j["scheme"] = std::string(to_string(config.scheme));
  j["trials"] = config.trials;
  j["seed"] = config.master_seed;
  j["guard_coeff"] = config.guard_coeff;
  j["guard_slots"] = plan.guard;
  j["m1"] = plan.m1;
  j["m2"] = plan.m2;
  j["planned_sum_rate"] = static_cast<double>(plan.m1 + plan.m2) / static_cast<double>(config.n);
  j["mean_sum_rate"] = stats.mean_sum_rate;
  j["sum_rate_stddev"] = stats.sum_rate_stddev;
  j["ci95_low"] = stats.ci95_low;
  j["ci95_high"] = stats.ci95_high;
  j["failure_rate_1"] = stats.failure_rate_1;
  j["failure_rate_2"] = stats.failure_rate_2;
  j["mean_slots_per_raw_packet"] = stats.mean_slots_per_raw_packet;
  j["mean_backlog_fraction_1"] = stats.mean_backlog_fraction_1;
  j["mean_backlog_fraction_2"] = stats.mean_backlog_fraction_2;
  j["bit_errors"] = stats.bit_errors;
  j["analytic_sum_rate"] = analytic_sum_rate(p, config.scheme);
  j["outer_max_sum"] = max_sum_rate(outer_region(p));
  return j;
}

}  // namespace bpec
