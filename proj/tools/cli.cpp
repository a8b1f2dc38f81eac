#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "xrcn/data.hpp"
#include "xrcn/image.hpp"
#include "xrcn/model_io.hpp"
#include "xrcn/plot.hpp"
#include "xrcn/train.hpp"

namespace xrcn::cli {

namespace {

namespace fs = std::filesystem;

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

struct SynthArgs {
  std::string out;
  std::size_t n = 200;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string data, out, metrics;
  std::size_t epochs = 30;
  std::size_t batch = 16;
  float lr = 0.001f;
  std::uint64_t seed = 0;
  bool no_augment = false;
};

struct PredictArgs {
  std::string model, input;
};

struct EvaluateArgs {
  std::string model, data;
  std::string split = "all";
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
};

struct InspectArgs {
  std::string model;
};

struct PlotArgs {
  std::string metrics, out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const Dataset ds = synth_generate(a.n, a.seed, a.out);
  out << "wrote " << ds.count_label(0) << " " << kClassNames[0] << ", " << ds.count_label(1) << " " << kClassNames[1]
      << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const Dataset ds = load_dataset(a.data, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  out << "loaded " << ds.size() << " images (" << ds.count_label(0) << " " << kClassNames[0] << ", "
      << ds.count_label(1) << " " << kClassNames[1] << ")\n";

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  cfg.optimizer.learning_rate = a.lr;
  cfg.augment.enabled = !a.no_augment;
  const ArchSpec arch = reference_arch();

  const TrainResult r = train(ds, arch, cfg, [&](const EpochMetrics& m) {
    out << "epoch " << m.epoch << "/" << cfg.epochs << "  train_loss " << fixed(m.train_loss, 4) << "  train_acc "
        << fixed(m.train_accuracy, 4) << "  val_loss " << fixed(m.val_loss, 4) << "  val_acc "
        << fixed(m.val_accuracy, 4) << "\n";
    out.flush();
  });
  save_model(arch, r.params, a.out);
  write_text(a.metrics, metrics_to_csv(r.history));
  out << "final val accuracy: " << fixed(r.history.back().val_accuracy) << "\n";
  return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const Model m = load_model(a.model);
  const Tensor img = decode_and_resize(read_file(a.input), a.input, kImageSize);
  const Prediction p = predict(m.arch, m.params, img);
  out << p.label << "\t" << fixed(p.probability) << "\n";
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const Model m = load_model(a.model);
  std::vector<std::string> warnings;
  Dataset ds = load_dataset(a.data, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  if (a.split != "all") {
    DatasetSplit s = split_stratified(ds, a.train_fraction, a.seed);
    ds = a.split == "train" ? std::move(s.train) : std::move(s.test);
  }
  const Evaluation ev = evaluate(m.arch, m.params, ds);
  const auto& c = ev.confusion;
  const auto& names = m.arch.class_names;
  out << "records: " << ds.size() << "\n";
  out << "loss: " << fixed(ev.loss) << "\n";
  out << "accuracy: " << fixed(ev.accuracy) << "\n";
  out << "confusion (rows = true class, columns = predicted " << names[0] << ", " << names[1] << "):\n";
  out << "  " << names[0] << "\t" << c.tn << "\t" << c.fp << "\n";
  out << "  " << names[1] << "\t" << c.fn << "\t" << c.tp << "\n";
  return kExitOk;
}

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  const Model m = load_model(a.model);
  out << m.arch.to_text() << "\n";
  const auto shapes = infer_shapes(m.arch);
  const auto manifest = param_manifest(m.arch);
  out << "layer  output      params  spec\n";
  for (std::size_t i = 0; i < m.arch.layers.size(); ++i) {
    std::size_t n = 0;
    for (const auto& p : manifest) {
      if (p.name.starts_with(std::to_string(i) + ".")) n += p.shape.numel();
    }
    char line[160];
    std::snprintf(line, sizeof line, "%-6zu %-11s %-7zu %s\n", i, shapes[i].str().c_str(), n,
                  layer_text(m.arch.layers[i]).c_str());
    out << line;
  }
  out << "total parameters: " << param_count(m.arch) << "\n";
  return kExitOk;
}

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const auto history = metrics_from_csv(read_text(a.metrics));
  write_text(a.out, render_curves_svg(history));
  out << "wrote " << a.out << " (" << history.size() << " epochs)\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Binary chest X-ray CNN: synthesize data, train, evaluate, predict, inspect, plot.", "xrcn"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic NORMAL / COVID-19 image tree");
  s->add_option("--out", synth.out, "Output directory (created if missing)")->required();
  s->add_option("--n", synth.n, "Images per class")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the reference CNN on a dataset directory");
  t->add_option("--data", tr.data, "Dataset root containing NORMAL/ and COVID-19/")->required();
  t->add_option("--out", tr.out, "Model file to write (.xrcn)")->required();
  t->add_option("--metrics", tr.metrics, "Per-epoch metrics CSV to write")->required();
  t->add_option("--epochs", tr.epochs, "Number of epochs (>= 1)")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--batch", tr.batch, "Mini-batch size (>= 1)")->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--lr", tr.lr, "RMSprop learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  t->add_option("--seed", tr.seed, "Seed for split, init, shuffling, augmentation")->capture_default_str();
  t->add_flag("--no-augment", tr.no_augment, "Disable flip/rotate/zoom augmentation");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Classify one PNG/JPEG image");
  p->add_option("--model", pr.model, "Model file (.xrcn)")->required();
  p->add_option("--input", pr.input, "Image file")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Loss, accuracy and confusion counts on a dataset directory");
  e->add_option("--model", ev.model, "Model file (.xrcn)")->required();
  e->add_option("--data", ev.data, "Dataset root containing NORMAL/ and COVID-19/")->required();
  e->add_option("--split", ev.split, "Evaluate all records, or the train/test side of the stratified split")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();
  e->add_option("--seed", ev.seed, "Split seed (with --split)")->capture_default_str();
  e->add_option("--train-fraction", ev.train_fraction, "Split fraction (with --split)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  InspectArgs in;
  auto* i = app.add_subcommand("inspect", "Print architecture, layer shapes and parameter count");
  i->add_option("--model", in.model, "Model file (.xrcn)")->required();

  PlotArgs pl;
  auto* g = app.add_subcommand("plot", "Render accuracy and loss curves from a metrics CSV to SVG");
  g->add_option("--metrics", pl.metrics, "Metrics CSV written by train")->required();
  g->add_option("--out", pl.out, "SVG file to write")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (p->parsed()) return cmd_predict(pr, out);
    if (e->parsed()) return cmd_evaluate(ev, out, err);
    if (i->parsed()) return cmd_inspect(in, out);
    if (g->parsed()) return cmd_plot(pl, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace xrcn::cli
