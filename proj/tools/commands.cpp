#include "commands.hpp"

#include <algorithm>
#include <cfloat>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "lncde/errors.hpp"
#include "lncde/io.hpp"
#include "lncde/lie_basis.hpp"
#include "lncde/lip_bound.hpp"
#include "lncde/signature.hpp"
#include "lncde/toy_data.hpp"

namespace lncde::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<Example> examples_for(const ToyDataset& data, const std::vector<std::uint32_t>& idx) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (std::uint32_t i : idx) out.push_back({data.path(i), static_cast<int>(data.labels[i]), {}});
  return out;
}

ModelConfig config_from(const TrainArgs& a, std::size_t channels) {
  ModelConfig c;
  c.family = parse_family(a.model);
  if (c.family == Family::NCDE && a.logode_depth_given) {
    throw PreconditionError("--logode-depth does not apply to --model ncde");
  }
  c.input_channels = channels;
  c.hidden = a.hidden;
  c.vf_width = a.vf_width;
  c.vf_depth = a.vf_depth;
  c.logode_depth = c.family == Family::NCDE ? 1 : a.logode_depth;
  c.logode_step = a.logode_step;
  c.lambda = a.lambda;
  c.include_time = a.include_time;
  c.output_dim = 2;
  c.solver_step = a.solver_step;
  c.validate();
  return c;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "step,train_loss,val_accuracy,wall_seconds\n";
  for (const auto& r : rows) out << r.step << ',' << fmt(r.train_loss) << ',' << fmt(r.val_metric) << ',' << fmt(r.wall_seconds) << '\n';
  return out.str();
}

PiecewiseLinearPath parse_inline_path(const std::string& text) {
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t points = 0;
  std::stringstream rows(text);
  for (std::string row; std::getline(rows, row, ';');) {
    std::stringstream cols(row);
    std::size_t w = 0;
    for (std::string cell; std::getline(cols, cell, ',');) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw PreconditionError("--path: cannot parse '" + cell + "'");
      }
      if (used != cell.size()) throw PreconditionError("--path: cannot parse '" + cell + "'");
      values.push_back(x);
      ++w;
    }
    if (points == 0) width = w;
    if (w != width || w == 0) throw PreconditionError("--path: every point needs the same number of channels");
    ++points;
  }
  std::vector<double> times(points);
  for (std::size_t i = 0; i < points; ++i) times[i] = static_cast<double>(i);
  return PiecewiseLinearPath(std::move(times), std::move(values), width);
}

struct PathQuery {
  PiecewiseLinearPath path;
  Interval interval;
};

PathQuery resolve_path(const SigArgs& a) {
  if (a.path.empty() == a.data.empty()) throw PreconditionError("give exactly one of --path or --data");
  PathQuery q;
  q.path = a.path.empty() ? read_dataset(a.data).path(a.series) : parse_inline_path(a.path);
  q.interval = {0, q.path.size() - 1};
  if (!a.interval.empty()) {
    const auto colon = a.interval.find(':');
    if (colon == std::string::npos) throw PreconditionError("--interval must be first:last");
    try {
      q.interval.first = std::stoul(a.interval.substr(0, colon));
      q.interval.last = std::stoul(a.interval.substr(colon + 1));
    } catch (const std::exception&) {
      throw PreconditionError("--interval must be first:last");
    }
  }
  if (q.interval.first > q.interval.last || q.interval.last >= q.path.size()) {
    throw PreconditionError("--interval out of range for a path of " + std::to_string(q.path.size()) + " points");
  }
  if (a.depth == 0) throw PreconditionError("--depth must be positive");
  double size = 1.0;
  for (std::size_t k = 0; k < a.depth; ++k) size *= static_cast<double>(q.path.width());
  if (size > 1e7) throw UnsupportedError("width^depth exceeds the 1e7 coefficient limit");
  return q;
}

std::string word_label(std::size_t flat, std::size_t width, std::size_t length) {
  std::vector<std::size_t> letters(length);
  for (std::size_t k = length; k-- > 0;) {
    letters[k] = flat % width + 1;
    flat /= width;
  }
  std::string s = "(";
  for (std::size_t k = 0; k < length; ++k) s += (k ? "," : "") + std::to_string(letters[k]);
  return s + ")";
}

}  // namespace

int cmd_gen_data(const GenDataArgs& a) {
  if (a.out.empty()) throw PreconditionError("--out is required");
  if (a.splits.size() != 3) throw PreconditionError("--splits takes three fractions");
  ToySpec spec;
  spec.num_series = a.num;
  spec.length = a.length;
  spec.channels = a.channels;
  spec.task = a.task;
  spec.seed = a.seed;
  spec.train_fraction = a.splits[0];
  spec.val_fraction = a.splits[1];
  spec.test_fraction = a.splits[2];
  const ToyDataset data = generate(spec);
  write_dataset(a.out, data);
  std::size_t positives = 0;
  for (auto l : data.labels) positives += l;
  std::cout << "wrote " << data.size() << " series (task " << data.task << ", " << positives << " positive) to "
            << a.out << "\n";
  std::cout << "hash " << std::hex << dataset_hash(data) << std::dec << "\n";
  return 0;
}

int cmd_train(const TrainArgs& a) {
  if (a.data.empty() || a.out.empty()) throw PreconditionError("--data and --out are required");
  const ToyDataset data = read_dataset(a.data);
  const ModelConfig config = config_from(a, data.channels);
  fs::create_directories(a.out);
  const fs::path out(a.out);
  io::write_text_atomic((out / "config.json").string(), train_args_to_json(a));

  const auto train_set = prepare_all(config, examples_for(data, data.train));
  const auto val_set = prepare_all(config, examples_for(data, data.val));

  TrainOptions opts;
  opts.steps = a.steps;
  opts.batch = a.batch;
  opts.adam.lr = a.lr;
  opts.seed = a.seed;
  opts.eval_every = a.eval_every;
  opts.target_metric = a.target_accuracy;

  std::vector<MetricsRow> rows;
  const std::string csv_path = (out / "metrics.csv").string();
  const TrainResult result = train_model(config, train_set, val_set, opts, [&](const MetricsRow& row) {
    rows.push_back(row);
    io::write_text_atomic(csv_path, metrics_csv(rows));
    std::cout << "step " << row.step << "  train_loss " << row.train_loss << "  val_accuracy " << row.val_metric
              << "  " << row.wall_seconds << "s" << std::endl;
  });
  save_checkpoint((out / "checkpoint.bin").string(), config, result.best_params);
  if (a.plot) io::write_text_atomic((out / "metrics.svg").string(), metrics_svg(result.history, "val_accuracy"));
  std::cout << "best val_accuracy " << result.best_val_metric << " at step " << result.best_step << "\n";
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() || a.data.empty()) throw PreconditionError("--checkpoint and --data are required");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  if (!a.model.empty() && parse_family(a.model) != ck.config.family) {
    throw FormatError("checkpoint holds a " + to_string(ck.config.family) + " model, not " + a.model);
  }
  const ToyDataset data = read_dataset(a.data);
  if (data.channels != ck.config.input_channels) {
    throw FormatError("checkpoint expects " + std::to_string(ck.config.input_channels) + " channels, dataset has " +
                      std::to_string(data.channels));
  }
  const std::vector<std::uint32_t>* idx = nullptr;
  if (a.split == "train") idx = &data.train;
  else if (a.split == "val") idx = &data.val;
  else if (a.split == "test") idx = &data.test;
  else throw PreconditionError("--split must be train, val or test");
  if (idx->empty()) throw FormatError("split '" + a.split + "' is empty");

  const auto set = prepare_all(ck.config, examples_for(data, *idx));
  std::vector<const PreparedSeries*> ptrs;
  for (const auto& s : set) ptrs.push_back(&s);
  const double metric = evaluate_metric(ck.params, ck.config, ptrs);
  const std::string name = ck.config.mode == LabelMode::Classification ? "accuracy" : "mse";
  std::cout << a.split << "_" << name << " " << fmt(metric) << "\n";
  if (!a.out.empty()) {
    json report = {{"split", a.split}, {"metric", name}, {"value", metric}, {"count", set.size()},
                   {"family", to_string(ck.config.family)}};
    io::write_text_atomic(a.out, report.dump(2) + "\n");
  }
  return 0;
}

int cmd_sig(const SigArgs& a) {
  const PathQuery q = resolve_path(a);
  const TruncatedTensor sig = path_signature(q.path, q.interval, a.depth);
  std::cout << "() " << fmt(sig.scalar()) << "\n";
  for (std::size_t k = 1; k <= a.depth; ++k) {
    const auto level = sig.level(k);
    for (std::size_t i = 0; i < level.size(); ++i) {
      std::cout << word_label(i, q.path.width(), k) << " " << fmt(level[i]) << "\n";
    }
  }
  return 0;
}

int cmd_logsig(const SigArgs& a) {
  const PathQuery q = resolve_path(a);
  const LyndonBasis basis(q.path.width(), a.depth);
  const LogSignature ls = log_signature(q.path, q.interval, basis);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    std::cout << basis.words()[k].to_string() << " " << fmt(ls.coeffs[k]) << "\n";
  }
  return 0;
}

int cmd_lipbound(const LipArgs& a) {
  if (a.checkpoint.empty() == (a.unit_layers == 0)) {
    throw PreconditionError("give exactly one of --checkpoint or --unit-layers");
  }
  Lip2Report report;
  if (a.unit_layers > 0) {
    const std::vector<double> ones(a.unit_layers, 1.0);
    report.layer_bounds = ones;
    for (std::size_t k = 1; k <= ones.size(); ++k) {
      report.folded.push_back(fold_lip2(std::vector<double>(ones.begin(), ones.begin() + static_cast<std::ptrdiff_t>(k))));
    }
    report.network_bound = report.folded.back();
  } else {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const MlpSpec spec = ck.config.field_spec();
    if (spec.activations.front() != Activation::SiLU) {
      throw UnsupportedError("lipbound needs a SiLU vector field; checkpoint uses " + to_string(spec.activations.front()));
    }
    report = lip2_network_report(ck.params.field, spec, true);
    if (report.layer_bounds.size() < spec.depth) {
      std::cout << "note: the final " << to_string(spec.activations.back())
                << " layer is outside the SiLU bound and is not folded\n";
    }
  }
  for (std::size_t i = 0; i < report.layer_bounds.size(); ++i) {
    std::cout << "layer " << i + 1 << "  bound " << fmt(report.layer_bounds[i]);
    if (i < report.gammas.size()) std::cout << "  gamma " << fmt(report.gammas[i]);
    std::cout << "  folded " << fmt(report.folded[i]) << "\n";
  }
  std::cout << "network bound " << fmt(report.network_bound) << "\n";
  if (report.network_bound > static_cast<double>(FLT_MAX)) {
    std::cout << "warning: bound exceeds the float32 range and overflows to inf in single precision\n";
  }
  return 0;
}

int cmd_flops(const FlopArgs& a) {
  if (a.u <= 0 || a.v <= 0 || a.width <= 0 || a.depth <= 0) throw PreconditionError("flops: dimensions must be positive");
  std::cout << "u=" << a.u << " v=" << a.v << " n_h=" << a.width << " m=" << a.depth << "\n";
  for (Family f : {Family::NCDE, Family::NRDE, Family::LogNCDE}) {
    std::cout << to_string(f) << " " << flop_model(a.u, a.v, a.width, a.depth, f) << "\n";
  }
  return 0;
}

std::string train_args_to_json(const TrainArgs& a) {
  json j = {{"data", a.data},
            {"out", a.out},
            {"model", a.model},
            {"hidden", a.hidden},
            {"vf_depth", a.vf_depth},
            {"vf_width", a.vf_width},
            {"logode_depth", a.logode_depth},
            {"logode_step", a.logode_step},
            {"lr", a.lr},
            {"steps", a.steps},
            {"batch", a.batch},
            {"lambda", a.lambda},
            {"include_time", a.include_time},
            {"seed", a.seed},
            {"solver_step", a.solver_step},
            {"eval_every", a.eval_every},
            {"plot", a.plot}};
  j["target_accuracy"] = a.target_accuracy ? json(*a.target_accuracy) : json(nullptr);
  return j.dump(2) + "\n";
}

TrainArgs train_args_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config.json: ") + e.what());
  }
  TrainArgs a;
  try {
    a.data = j.value("data", a.data);
    a.out = j.value("out", a.out);
    a.model = j.value("model", a.model);
    a.hidden = j.value("hidden", a.hidden);
    a.vf_depth = j.value("vf_depth", a.vf_depth);
    a.vf_width = j.value("vf_width", a.vf_width);
    a.logode_depth = j.value("logode_depth", a.logode_depth);
    a.logode_step = j.value("logode_step", a.logode_step);
    a.lr = j.value("lr", a.lr);
    a.steps = j.value("steps", a.steps);
    a.batch = j.value("batch", a.batch);
    a.lambda = j.value("lambda", a.lambda);
    a.include_time = j.value("include_time", a.include_time);
    a.seed = j.value("seed", a.seed);
    a.solver_step = j.value("solver_step", a.solver_step);
    a.eval_every = j.value("eval_every", a.eval_every);
    a.plot = j.value("plot", a.plot);
    if (j.contains("target_accuracy") && !j["target_accuracy"].is_null()) {
      a.target_accuracy = j["target_accuracy"].get<double>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("config.json: ") + e.what());
  }
  return a;
}

std::string metrics_svg(const std::vector<MetricsRow>& rows, const std::string& metric_name) {
  constexpr double W = 720, H = 300, pad = 50;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << 2 * H << "\">\n";
  auto panel = [&](double y0, const std::string& title, auto value) {
    double lo = 0.0, hi = 1e-12, xmax = 1.0;
    for (const auto& r : rows) {
      hi = std::max(hi, value(r));
      lo = std::min(lo, value(r));
      xmax = std::max(xmax, static_cast<double>(r.step));
    }
    auto px = [&](double x) { return pad + (W - 2 * pad) * x / xmax; };
    auto py = [&](double y) { return y0 + H - pad - (H - 2 * pad) * (y - lo) / (hi - lo); };
    svg << "<text x=\"" << pad << "\" y=\"" << y0 + 25 << "\" font-family=\"sans-serif\" font-size=\"14\">" << title
        << "</text>\n";
    svg << "<rect x=\"" << pad << "\" y=\"" << y0 + pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
        << "\" fill=\"none\" stroke=\"#999\"/>\n";
    svg << "<text x=\"5\" y=\"" << py(hi) + 4 << "\" font-size=\"10\">" << fmt(hi).substr(0, 6) << "</text>\n";
    svg << "<text x=\"5\" y=\"" << py(lo) + 4 << "\" font-size=\"10\">" << fmt(lo).substr(0, 6) << "</text>\n";
    svg << "<text x=\"" << W - pad << "\" y=\"" << y0 + H - pad + 15 << "\" font-size=\"10\">" << xmax << "</text>\n";
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : rows) svg << px(static_cast<double>(r.step)) << "," << py(value(r)) << " ";
    svg << "\"/>\n";
  };
  panel(0, "train_loss", [](const MetricsRow& r) { return r.train_loss; });
  panel(H, metric_name, [](const MetricsRow& r) { return r.val_metric; });
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace lncde::cli
