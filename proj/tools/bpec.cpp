// Command-line front end: region, sweep, simulate, figure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "bpec/report.hpp"
#include "json.hpp"

namespace {

struct RunConfig {
  double delta_a = 0.75;
  double delta_b = 0.0;
  std::optional<double> delta_t;  // default: max(delta_a, delta_b)
  double eta = 32.0 / 35.0;
  std::string eta_grid = "0:1:0.01";
  std::int64_t n = 100000;
  std::optional<std::int64_t> n_t;
  std::string scheme = "inter";
  std::int64_t trials = 200;
  std::uint64_t seed = 1;
  double guard_coeff = bpec::kDefaultGuardCoeff;
  unsigned threads = 1;
};

// String-valued flags so "32/35" works anywhere a probability is expected.
struct RawFlags {
  std::string delta_a, delta_b, delta_t, eta;
};

void load_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  const auto j = nlohmann::json::parse(in);
  auto num = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  num("delta_a", c.delta_a);
  num("delta_b", c.delta_b);
  if (j.contains("delta_t")) c.delta_t = j.at("delta_t").get<double>();
  num("eta", c.eta);
  num("eta_grid", c.eta_grid);
  num("n", c.n);
  if (j.contains("n_t")) c.n_t = j.at("n_t").get<std::int64_t>();
  num("scheme", c.scheme);
  num("trials", c.trials);
  num("seed", c.seed);
  num("guard_coeff", c.guard_coeff);
  num("threads", c.threads);
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write to '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-user broadcast packet erasure channel with two erasure modes: "
               "outer bounds, achievable sum-rates and Monte Carlo protocol runs."};
  app.require_subcommand(1);

  RunConfig cfg;
  RawFlags raw;
  std::string config_path;
  std::string out_path;
  std::string format = "text";
  std::string figure_name;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override its values");
    sub->add_option("--delta-a", raw.delta_a, "erasure probability in mode A [default 0.75]");
    sub->add_option("--delta-b", raw.delta_b, "erasure probability in mode B [default 0]");
    sub->add_option("--eta", raw.eta, "fraction of the block in mode A [default 32/35]");
    sub->add_option("--out", out_path, "output file [default stdout]");
  };
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--delta-t", raw.delta_t,
                    "erasure probability in the transient mode [default max(delta_a, delta_b)]");
    sub->add_option("--n", cfg.n, "blocklength")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--n-t", cfg.n_t, "transient length [default ceil(n^(2/3))]")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--scheme", cfg.scheme, "coding scheme")
        ->capture_default_str()
        ->check(CLI::IsMember({"inter", "intra", "nofb"}));
    sub->add_option("--trials", cfg.trials, "Monte Carlo trials")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    sub->add_option("--guard-coeff", cfg.guard_coeff, "guard coefficient c in ceil(c n^(2/3))")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", cfg.threads, "worker threads, 0 = all cores")
        ->capture_default_str();
  };

  auto* region = app.add_subcommand("region", "outer-bound polytope and achievable sums");
  add_common(region);
  RawFlags pos;
  region->add_option("DELTA_A", pos.delta_a, "positional form of --delta-a");
  region->add_option("DELTA_B", pos.delta_b, "positional form of --delta-b");
  region->add_option("ETA", pos.eta, "positional form of --eta");
  region->add_option("--format", format, "text or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json"}));

  auto* sweep = app.add_subcommand("sweep", "CSV sweep of sum-rates over an eta grid");
  add_common(sweep);
  sweep->add_option("--eta-grid", cfg.eta_grid, "start:stop:step")->capture_default_str();
  sweep->add_option("--format", format, "csv only")->check(CLI::IsMember({"text", "csv"}));

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run, JSON report");
  add_common(simulate);
  add_sim(simulate);
  simulate->add_option("--format", format, "json only")->check(CLI::IsMember({"text", "json"}));

  auto* figure = app.add_subcommand("figure", "CSV data for fig3, fig4 or fig5");
  figure->add_option("name", figure_name, "fig3, fig4 or fig5")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig4", "fig5"}));
  figure->add_option("--out", out_path, "output file [default stdout]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) load_config_file(config_path, cfg);
    for (auto [from, to] : {std::pair{&pos.delta_a, &raw.delta_a}, {&pos.delta_b, &raw.delta_b},
                            {&pos.eta, &raw.eta}}) {
      if (!from->empty()) {
        if (!to->empty()) throw std::invalid_argument("value given both positionally and as a flag");
        *to = *from;
      }
    }
    if (!raw.delta_a.empty()) cfg.delta_a = bpec::parse_ratio(raw.delta_a);
    if (!raw.delta_b.empty()) cfg.delta_b = bpec::parse_ratio(raw.delta_b);
    if (!raw.delta_t.empty()) cfg.delta_t = bpec::parse_ratio(raw.delta_t);
    if (!raw.eta.empty()) cfg.eta = bpec::parse_ratio(raw.eta);
    const bpec::ModeParams params{cfg.delta_a, cfg.delta_b, cfg.eta};

    if (*figure) {
      Output out(out_path);
      bpec::write_figure_csv(bpec::parse_figure(figure_name), out.stream());
      return 0;
    }

    bpec::validate(params);
    if (*region) {
      // Build the report before opening the output so bad input leaves no file.
      const std::string text = format == "json" ? bpec::region_report(params).dump(2) + "\n"
                                                : bpec::region_text(params);
      Output out(out_path);
      out.stream() << text;
      return 0;
    }
    if (*sweep) {
      const auto grid = bpec::parse_eta_grid(cfg.eta_grid);
      std::ostringstream csv;
      bpec::write_sweep_csv(csv, bpec::sweep(cfg.delta_a, cfg.delta_b, grid.points()));
      Output out(out_path);
      out.stream() << csv.str();
      return 0;
    }
    if (*simulate) {
      bpec::SimulationConfig sc;
      sc.params = params;
      sc.n = cfg.n;
      sc.n_t = cfg.n_t;
      sc.delta_t = cfg.delta_t;
      sc.scheme = bpec::parse_scheme(cfg.scheme);
      sc.trials = cfg.trials;
      sc.master_seed = cfg.seed;
      sc.guard_coeff = cfg.guard_coeff;
      sc.threads = cfg.threads;
      const auto stats = bpec::simulate(sc);
      const auto report = bpec::simulation_report(sc, stats).dump(2);
      Output out(out_path);
      out.stream() << report << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
