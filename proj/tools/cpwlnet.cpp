#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpwlnet/cpwlnet.hpp"

using namespace cpwlnet;
using nlohmann::ordered_json;

namespace {

struct PartitionArgs {
  std::vector<double> boundaries;
  int groups = 0;
  std::string regions_path;
};

void add_partition_flags(CLI::App* cmd, PartitionArgs& p) {
  cmd->add_option("--boundaries", p.boundaries, "interior boundaries of a 1-D partition (strictly increasing)");
  cmd->add_option("--groups", p.groups, "split the sorted inputs into P groups of near-equal size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--regions", p.regions_path,
                  "JSON file of convex regions, each a list of {normal, offset} halfspaces");
}

Partition regions_from_file(const Dataset& data, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  const Polytope domain = default_domain(data);
  std::vector<Polytope> regions;
  for (const auto& r : j.at("regions")) {
    Polytope poly = domain;
    for (const auto& h : r) {
      const Eigen::VectorXd normal = vector_from_json(h.at("normal"));
      if (normal.size() != data.dx())
        throw ShapeError(path + ": halfspace normal has " + std::to_string(normal.size()) +
                         " entries, inputs have " + std::to_string(data.dx()));
      poly = poly.clip(Halfspace{normal, h.at("offset").get<double>()});
    }
    if (!poly.is_solid()) throw ArgumentError(path + ": a region has empty interior inside the domain");
    regions.push_back(std::move(poly));
  }
  return assign_regions(data, domain, std::move(regions));
}

Partition make_partition(const Dataset& data, const PartitionArgs& p) {
  const int given = (!p.boundaries.empty()) + (p.groups > 0) + (!p.regions_path.empty());
  if (given > 1) throw ArgumentError("give only one of --boundaries, --groups, --regions");
  if (!p.regions_path.empty()) return regions_from_file(data, p.regions_path);
  if (!p.boundaries.empty()) {
    if (std::set<double>(p.boundaries.begin(), p.boundaries.end()).size() != p.boundaries.size())
      throw ArgumentError("--boundaries: duplicate boundary");
    return partition_1d(data, p.boundaries);
  }
  if (p.groups > 1) return partition_1d(data, even_boundaries_1d(data, p.groups));
  return trivial_partition(data);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path);
  out << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

CnnArch make_arch(int stages, int patch, int stride, const std::string& pool, int pool_patch,
                  int pool_stride) {
  CnnArch arch;
  for (int s = 0; s < stages; ++s) {
    CnnStageSpec st;
    st.conv_patch = patch;
    st.conv_stride = stride;
    if (pool != "none") {
      PoolLayer pl;
      pl.kind = pool == "max" ? PoolKind::max : PoolKind::average;
      pl.patch = pool_patch;
      pl.stride = pool_stride > 0 ? pool_stride : pool_patch;
      st.pool = pl;
    }
    arch.push_back(st);
  }
  return arch;
}

template <typename Net>
ordered_json eval_network(const Net& net, const Dataset& data, const LossFn& loss,
                          const std::string& predictions_path) {
  const NetworkEvaluation ev = network_risk(net, data, loss);
  if (!predictions_path.empty()) {
    std::ostringstream os;
    for (int k = 0; k < data.dx(); ++k) os << (k ? "," : "") << 'x' << k;
    for (int k = 0; k < data.dy(); ++k) os << ",yhat" << k;
    os << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (int k = 0; k < data.dx(); ++k) os << (k ? "," : "") << format_real(data[i].x(k));
      for (int k = 0; k < data.dy(); ++k) os << ',' << format_real(ev.traces[i].output(k));
      os << '\n';
    }
    write_text(predictions_path, os.str());
  }
  return {{"n", data.size()}, {"loss", loss.name}, {"risk", ev.risk}, {"min_margin", ev.min_margin()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build ReLU networks from piecewise-linear fits and certify spurious local minima"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a dataset CSV");
  bool parabola = false;
  int n = 40;
  double lo = -1.0, hi = 1.0;
  std::string gen_from, gen_out;
  gen->add_flag("--parabola", parabola, "evenly spaced samples of y = x^2");
  gen->add_option("--n", n, "sample count (>= 2)");
  gen->add_option("--lo", lo, "left end of the interval");
  gen->add_option("--hi", hi, "right end of the interval");
  gen->add_option("--from", gen_from, "validate and rewrite an existing CSV instead");
  gen->add_option("-o,--output", gen_out, "output CSV (default stdout)");

  // certify
  auto* cert = app.add_subcommand("certify", "fit, build, probe and refine; write a report");
  std::string data_path, loss_name = "mse", report_out, plot_out;
  PartitionArgs part_args;
  int trials = 1000;
  std::uint64_t seed = 0;
  double shift = 0.0;
  cert->add_option("-d,--data", data_path, "dataset CSV")->required();
  add_partition_flags(cert, part_args);
  cert->add_option("--loss", loss_name, "mse | abs");
  cert->add_option("--trials", trials, "perturbation trials per scale")->check(CLI::PositiveNumber);
  cert->add_option("--seed", seed, "probe seed");
  cert->add_option("--c", shift, "positive bias added to the piece layer (default: automatic)");
  cert->add_option("-o,--output", report_out, "report JSON (default stdout)");
  cert->add_option("--plot", plot_out, "write an SVG panel of the fit (1-D inputs)");

  // enumerate
  auto* en = app.add_subcommand("enumerate", "risk of every contiguous 1-D partition");
  int pmax = 2;
  std::string table_out, summary_out;
  en->add_option("-d,--data", data_path, "dataset CSV")->required();
  en->add_option("--pmax", pmax, "largest group count")->check(CLI::PositiveNumber);
  en->add_option("--loss", loss_name, "mse | abs");
  en->add_option("-o,--output", table_out, "table CSV (default stdout)");
  en->add_option("--summary", summary_out, "summary JSON (default stderr)");

  // build
  auto* bld = app.add_subcommand("build", "write the network realizing the fitted predictor");
  std::string net_out, arch_name = "fc", pool = "avg";
  int patch = 2, stride = 2, stages = 1, pool_patch = 2, pool_stride = 0;
  bld->add_option("-d,--data", data_path, "dataset CSV")->required();
  add_partition_flags(bld, part_args);
  bld->add_option("--loss", loss_name, "mse | abs (fc only)");
  bld->add_option("--c", shift, "positive bias added to the piece layer (default: automatic)");
  bld->add_option("--arch", arch_name, "fc | cnn")->check(CLI::IsMember({"fc", "cnn"}));
  bld->add_option("--patch", patch, "convolution patch size")->check(CLI::PositiveNumber);
  bld->add_option("--stride", stride, "convolution stride")->check(CLI::PositiveNumber);
  bld->add_option("--stages", stages, "convolution stages")->check(CLI::PositiveNumber);
  bld->add_option("--pool", pool, "avg | max | none")->check(CLI::IsMember({"avg", "max", "none"}));
  bld->add_option("--pool-patch", pool_patch, "pooling window")->check(CLI::PositiveNumber);
  bld->add_option("--pool-stride", pool_stride, "pooling stride (default: window)");
  bld->add_option("-o,--output", net_out, "network JSON (default stdout)");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a saved network on a dataset");
  std::string model_path, pred_out;
  ev->add_option("-m,--model", model_path, "network JSON")->required();
  ev->add_option("-d,--data", data_path, "dataset CSV")->required();
  ev->add_option("--loss", loss_name, "mse | abs");
  ev->add_option("-o,--output", pred_out, "predictions CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      Dataset data = [&] {
        if (!gen_from.empty()) return load_csv(gen_from);
        if (!parabola) throw ArgumentError("gen: give --parabola or --from");
        if (n < 2) throw ArgumentError("gen: --n must be at least 2");
        return gen_parabola(n, lo, hi);
      }();
      std::ostringstream os;
      write_csv(os, data);
      write_text(gen_out, os.str());
    } else if (*cert) {
      const Dataset data = load_csv(data_path);
      const LossFn loss = LossFn::by_name(loss_name);
      BuildConfig bc;
      bc.c = shift;
      const Pipeline pl = run_pipeline(data, make_partition(data, part_args), loss, bc);
      ProbeConfig pc;
      pc.trials = trials;
      pc.seed = seed;
      const CertificationReport rep = demonstrate_spurious(pl, data, loss, pc, bc);
      write_text(report_out, dump(to_json(rep)));
      if (!plot_out.empty()) {
        PlotStyle style;
        style.title = "P = " + std::to_string(pl.fits.size()) + ", risk " + format_real(rep.base.risk);
        save_svg(plot_out, render_svg(pl.predictor, data, style));
      }
    } else if (*en) {
      const Dataset data = load_csv(data_path);
      const PatternTable t = enumerate_patterns_1d(data, pmax, LossFn::by_name(loss_name));
      std::ostringstream os;
      os << "id,P,risk,boundaries\n";
      for (const auto& r : t.rows) {
        os << r.id << ',' << r.groups << ',' << format_real(r.risk) << ',';
        for (std::size_t k = 0; k < r.boundaries.size(); ++k) os << (k ? " " : "") << format_real(r.boundaries[k]);
        os << '\n';
      }
      write_text(table_out, os.str());
      ordered_json s;
      s["rows"] = t.rows.size();
      s["distinct_risk_levels"] = t.distinct_levels;
      s["best_risk_by_P"] = t.best_risk_by_p;
      if (summary_out.empty())
        std::cerr << s.dump() << '\n';
      else
        write_text(summary_out, dump(s));
    } else if (*bld) {
      const Dataset data = load_csv(data_path);
      const Partition part = make_partition(data, part_args);
      BuildConfig bc;
      bc.c = shift;
      if (arch_name == "cnn") {
        const CnnBuild b = build_cnn_network(data, part, make_arch(stages, patch, stride, pool, pool_patch, pool_stride), bc);
        write_text(net_out, dump(to_json(b.net)));
      } else {
        write_text(net_out, dump(to_json(run_pipeline(data, part, LossFn::by_name(loss_name), bc).net)));
      }
    } else if (*ev) {
      const Dataset data = load_csv(data_path);
      const LossFn loss = LossFn::by_name(loss_name);
      std::ifstream in(model_path);
      if (!in) throw ArgumentError("cannot open " + model_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(model_path + ": " + e.what());
      }
      const ordered_json out = j.value("type", "fc") == "cnn"
                                   ? eval_network(cnn_network_from_json(j), data, loss, pred_out)
                                   : eval_network(relu_network_from_json(j), data, loss, pred_out);
      std::cout << dump(out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
