// evseg: command-line front end for the event segmentation toolkit.
//
// Exit codes: 0 success, 2 usage, 3 I/O, 4 validation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evseg/evseg.hpp"

namespace fs = std::filesystem;
using namespace evseg;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot create " + p.string());
  return out;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(Errc::Io, "cannot create directory " + p.string());
}

void save_labels(const fs::path& p, const LabelMap& labels) {
  auto out = open_out(p);
  write_label_pgm(out, labels);
}

void save_tensor(const fs::path& p, const ReprTensor& t, SampleType dtype) {
  auto out = open_out(p);
  write_rpt1(out, t, dtype);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string scene;
  std::string out;
  std::string csv;
  std::string labels_dir;
  std::int64_t window_us = 50'000;
  std::uint32_t crop_bottom = 0;
};

int cmd_synth(const SynthArgs& a, const Globals& g) {
  auto in = open_in(a.scene);
  SceneFile scene = parse_scene(in);
  if (g.seed) scene.config.seed = *g.seed;
  const SynthResult synth = generate_events(scene.objects, scene.config);
  {
    auto out = open_out(a.out);
    write_binary(synth.stream, out);
  }
  if (!a.csv.empty()) {
    auto out = open_out(a.csv);
    write_csv(synth.stream, out);
  }
  std::size_t windows = 0;
  if (!a.labels_dir.empty()) {
    ensure_dir(a.labels_dir);
    if (!synth.stream.empty()) {
      const auto slices = slice_tiled(synth.stream, a.window_us);
      for (std::size_t k = 0; k < slices.size(); ++k) {
        LabelMap labels = synth.labels(slices[k].window.t_end_us());
        if (a.crop_bottom > 0) labels = crop_bottom(labels, a.crop_bottom);
        save_labels(fs::path(a.labels_dir) / (window_id(k) + ".pgm"), labels);
      }
      windows = slices.size();
    }
  }
  if (!g.quiet) {
    std::cout << "events=" << synth.stream.size() << "\n"
              << "label_maps=" << windows << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
  std::string events;
  std::string out_dir;
  std::string repr = "histmeanstd6";
  std::int64_t window_us = 50'000;
  std::string anchors;
  std::string dtype = "f64";
  std::uint32_t crop_bottom = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::string polarity = "signed";
};

EventStream load_events(const std::string& path, std::uint32_t width, std::uint32_t height,
                        const std::string& polarity) {
  auto in = open_in(path);
  if (fs::path(path).extension() == ".csv") {
    if (width == 0 || height == 0) throw UsageError("CSV input needs --width and --height");
    return parse_csv(in, SensorGeometry{width, height},
                     polarity == "zero_one" ? PolarityMode::ZeroOne : PolarityMode::Signed);
  }
  return parse_binary(in);
}

std::vector<std::int64_t> load_anchors(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::int64_t> anchors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::int64_t a = 0;
    if (!detail::parse_int(text, a)) throw Error(Errc::ParseError, "bad anchor timestamp", line_no);
    anchors.push_back(a);
  }
  return anchors;
}

int cmd_encode(const EncodeArgs& a, const Globals& g) {
  const ReprKind kind = parse_repr_kind(a.repr);
  const SampleType dtype = a.dtype == "f32" ? SampleType::F32 : SampleType::F64;
  const EventStream stream = load_events(a.events, a.width, a.height, a.polarity);

  std::vector<WindowSlice> slices;
  if (!a.anchors.empty()) {
    const auto anchors = load_anchors(a.anchors);
    slices = slice_anchored(stream, a.window_us, anchors);
  } else {
    slices = slice_tiled(stream, a.window_us);
  }
  ensure_dir(a.out_dir);
  std::uint64_t covered = 0;
  for (std::size_t k = 0; k < slices.size(); ++k) {
    ReprTensor t = encode_batch(slices[k].events, slices[k].window, stream.geometry(), kind);
    if (a.crop_bottom > 0) t = crop_bottom(t, a.crop_bottom);
    save_tensor(fs::path(a.out_dir) / (window_id(k) + ".rpt1"), t, dtype);
    covered += slices[k].events.size();
  }
  if (!g.quiet) {
    std::cout << "repr=" << repr_name(kind) << "\n"
              << "window_us=" << a.window_us << "\n"
              << "windows=" << slices.size() << "\n"
              << "events=" << stream.size() << "\n"
              << "events_in_windows=" << covered << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string pred_dir;
  std::string truth_dir;
  std::uint32_t classes = kNumClasses;
  std::string policy = "both";
};

int cmd_eval(const EvalArgs& a, const Globals&) {
  if (!fs::is_directory(a.pred_dir) || !fs::is_directory(a.truth_dir)) {
    throw UsageError("--pred and --truth must be directories");
  }
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(a.truth_dir)) {
    if (e.path().extension() == ".pgm" && fs::exists(fs::path(a.pred_dir) / e.path().filename())) {
      ids.push_back(e.path().stem().string());
    }
  }
  if (ids.empty()) throw UsageError("no matching <id>.pgm pairs between --pred and --truth");
  std::sort(ids.begin(), ids.end());

  ConfusionMatrix cm(a.classes);
  std::uint64_t pixels = 0;
  for (const auto& id : ids) {
    const LabelMap truth = load_label_file(fs::path(a.truth_dir) / (id + ".pgm"));
    const LabelMap pred = load_label_file(fs::path(a.pred_dir) / (id + ".pgm"));
    cm.accumulate(truth, pred);
    pixels += truth.data.size();
  }
  const auto lit = miou(cm, MiouPolicy::AllClasses);
  const auto exc = miou(cm, MiouPolicy::ExcludeAbsent);

  std::cout << std::setprecision(10);
  std::cout << "images=" << ids.size() << "\n"
            << "pixels=" << pixels << "\n"
            << "labeled_pixels=" << cm.total() << "\n"
            << "ignored_pixels=" << pixels - cm.total() << "\n"
            << "accuracy=" << accuracy(cm) << "\n";
  if (a.policy == "both" || a.policy == "literal") std::cout << "miou_literal=" << lit.mean << "\n";
  if (a.policy == "both" || a.policy == "exclude_absent") std::cout << "miou_exclude_absent=" << exc.mean << "\n";
  for (std::uint32_t c = 0; c < a.classes; ++c) {
    std::uint64_t truth_px = 0;
    for (std::uint32_t k = 0; k < a.classes; ++k) truth_px += cm.at(c, k);
    std::cout << "class" << c << ".name=" << (c < kClassNames.size() ? std::string(kClassNames[c]) : "class" + std::to_string(c))
              << "\n"
              << "class" << c << ".iou=" << lit.iou[c] << "\n"
              << "class" << c << ".present=" << (lit.present[c] ? 1 : 0) << "\n"
              << "class" << c << ".truth_pixels=" << truth_px << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data_dir;
  std::string out;
  std::uint32_t classes = kNumClasses;
  std::uint32_t steps = 1000;
  double lr = 0.5;
  std::uint32_t batch_pixels = 4096;
  double l2 = 0.0;
  std::uint32_t augment_copies = 0;
  std::string trace;
};

int cmd_train(const TrainArgs& a, const Globals& g) {
  if (!fs::is_directory(a.data_dir)) throw UsageError("--data must be a directory");
  std::vector<Sample> samples = load_samples(a.data_dir);
  if (samples.empty()) throw UsageError("no <id>.rpt1 + <id>.pgm pairs in " + a.data_dir);
  const std::uint64_t seed = g.seed.value_or(0);
  if (a.augment_copies > 0) {
    const std::size_t n = samples.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::uint32_t k = 0; k < a.augment_copies; ++k) {
        Sample copy = samples[i];
        copy.id += "#aug" + std::to_string(k);
        samples.push_back(augment(copy, seed));
      }
    }
  }
  TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.steps = a.steps;
  cfg.batch_pixels = a.batch_pixels;
  cfg.seed = seed;
  cfg.l2 = a.l2;
  const LinearPixelModel init(a.classes, samples.front().tensor.channels());
  const TrainResult result = train(init, samples, cfg);
  {
    auto out = open_out(a.out);
    save_model(out, result.model);
  }
  if (!a.trace.empty()) {
    auto out = open_out(a.trace);
    out << std::setprecision(17);
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) out << i << ' ' << result.loss_trace[i] << '\n';
  }
  if (!g.quiet) {
    std::cout << std::setprecision(10) << "samples=" << samples.size() << "\n"
              << "features=" << init.num_features() << "\n"
              << "initial_loss=" << result.loss_trace.front() << "\n"
              << "final_loss=" << result.loss_trace.back() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string in;
  std::string out_dir;
};

int cmd_predict(const PredictArgs& a, const Globals& g) {
  auto min = open_in(a.model);
  const LinearPixelModel model = load_model(min);
  std::vector<fs::path> inputs;
  if (fs::is_directory(a.in)) {
    for (const auto& e : fs::directory_iterator(a.in)) {
      if (e.path().extension() == ".rpt1") inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
  } else {
    inputs.push_back(a.in);
  }
  if (inputs.empty()) throw UsageError("no .rpt1 inputs in " + a.in);
  ensure_dir(a.out_dir);
  for (const auto& p : inputs) {
    save_labels(fs::path(a.out_dir) / (p.stem().string() + ".pgm"), predict(model, load_rpt1_file(p)));
  }
  if (!g.quiet) std::cout << "predictions=" << inputs.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct VisualizeArgs {
  std::string in;
  std::string out;
  std::uint32_t channel = 0;
  std::string scaling = "minmax";
};

int cmd_visualize(const VisualizeArgs& a, const Globals&) {
  const ReprTensor t = load_rpt1_file(a.in);
  const auto bytes =
      visualize_channel(t, a.channel, a.scaling == "unit" ? ChannelScaling::FixedUnit : ChannelScaling::MinMax);
  auto out = open_out(a.out);
  write_pgm(out, t.geometry, bytes);
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::uint64_t events = 1'000'000;
  std::uint32_t width = 346;
  std::uint32_t height = 260;
  std::int64_t window_us = 50'000;
  double rate_hz = 2'000'000.0;
  std::string repr = "histmeanstd6";
};

int cmd_bench(const BenchArgs& a, const Globals& g) {
  BenchConfig cfg;
  cfg.geometry = {a.width, a.height};
  cfg.events = a.events;
  cfg.window_us = a.window_us;
  cfg.event_rate_hz = a.rate_hz;
  cfg.seed = g.seed.value_or(0);
  cfg.kind = parse_repr_kind(a.repr);
  if (a.window_us <= 0 || !(a.rate_hz > 0)) throw UsageError("--window-us and --rate must be positive");
  const BenchReport r = run_bench(cfg);
  std::cout << std::setprecision(17) << "events=" << r.events << "\n"
            << "windows=" << r.windows << "\n"
            << "checksum=" << r.checksum << "\n"
            << std::setprecision(6) << "batch_events_per_second=" << r.batch_events_per_second() << "\n"
            << "streaming_events_per_second=" << r.streaming_events_per_second() << "\n"
            << "streaming_f32_events_per_second=" << r.streaming_f32_events_per_second() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-camera representation, evaluation and toy segmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals globals;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides scene seed for synth)");
  app.add_flag("--quiet", globals.quiet, "Suppress informational output");

  const std::vector<std::string> repr_names = {"last1", "hist2", "histrecent4", "histmeanstd6"};

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Simulate events and ground-truth labels from a scene file");
  s->add_option("--scene", synth.scene, "Scene JSON")->required();
  s->add_option("--out", synth.out, "Output EVS1 event file")->required();
  s->add_option("--csv", synth.csv, "Also write events as CSV");
  s->add_option("--labels-dir", synth.labels_dir, "Write one label PGM per tiled window (label at window end)");
  s->add_option("--window-us", synth.window_us, "Window length for label maps")->check(CLI::PositiveNumber);
  s->add_option("--crop-bottom", synth.crop_bottom, "Drop this many bottom rows from label maps");

  EncodeArgs enc;
  auto* e = app.add_subcommand("encode", "Encode an event stream into RPT1 tensors, one per window");
  e->add_option("--events", enc.events, "EVS1 file (or .csv with --width/--height)")->required();
  e->add_option("--out-dir", enc.out_dir, "Output directory")->required();
  e->add_option("--repr", enc.repr, "Representation")->check(CLI::IsMember(repr_names));
  e->add_option("--window-us", enc.window_us, "Integration interval in microseconds")->check(CLI::PositiveNumber);
  e->add_option("--anchors", enc.anchors, "File of anchor timestamps; windows are [a - T, a)");
  e->add_option("--dtype", enc.dtype, "Sample type")->check(CLI::IsMember({"f32", "f64"}));
  e->add_option("--crop-bottom", enc.crop_bottom, "Drop this many bottom rows");
  e->add_option("--width", enc.width, "Sensor width (CSV input)");
  e->add_option("--height", enc.height, "Sensor height (CSV input)");
  e->add_option("--polarity", enc.polarity, "CSV polarity encoding")->check(CLI::IsMember({"signed", "zero_one"}));

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "Compare predicted and ground-truth label maps");
  v->add_option("--pred", ev.pred_dir, "Directory of predicted <id>.pgm")->required();
  v->add_option("--truth", ev.truth_dir, "Directory of ground-truth <id>.pgm")->required();
  v->add_option("--classes", ev.classes, "Number of classes")->check(CLI::Range(1, 254));
  v->add_option("--miou-policy", ev.policy, "literal, exclude_absent or both")
      ->check(CLI::IsMember({"literal", "exclude_absent", "both"}));

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the linear per-pixel classifier on paired RPT1/PGM samples");
  t->add_option("--data", tr.data_dir, "Directory with <id>.rpt1 and <id>.pgm")->required();
  t->add_option("--out", tr.out, "Output LPM1 model")->required();
  t->add_option("--classes", tr.classes, "Number of classes")->check(CLI::Range(1, 254));
  t->add_option("--steps", tr.steps, "Gradient steps")->check(CLI::PositiveNumber);
  t->add_option("--lr", tr.lr, "Learning rate")->check(CLI::PositiveNumber);
  t->add_option("--batch-pixels", tr.batch_pixels, "Pixels per minibatch (0 = all)");
  t->add_option("--l2", tr.l2, "L2 weight decay")->check(CLI::NonNegativeNumber);
  t->add_option("--augment-copies", tr.augment_copies, "Random augmented copies per sample");
  t->add_option("--trace", tr.trace, "Write the per-step loss trace here");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Label RPT1 tensors with a trained model");
  p->add_option("--model", pr.model, "LPM1 model")->required();
  p->add_option("--in", pr.in, "RPT1 file or directory")->required();
  p->add_option("--out-dir", pr.out_dir, "Output directory for <id>.pgm")->required();

  VisualizeArgs vi;
  auto* z = app.add_subcommand("visualize", "Render one tensor channel as an 8-bit PGM");
  z->add_option("--in", vi.in, "RPT1 file")->required();
  z->add_option("--out", vi.out, "Output PGM")->required();
  z->add_option("--channel", vi.channel, "Channel index");
  z->add_option("--scaling", vi.scaling, "minmax or unit")->check(CLI::IsMember({"minmax", "unit"}));

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Measure encoding throughput on a generated stream");
  b->add_option("--events", be.events, "Number of events");
  b->add_option("--width", be.width, "Sensor width")->check(CLI::Range(1, 65535));
  b->add_option("--height", be.height, "Sensor height")->check(CLI::Range(1, 65535));
  b->add_option("--window-us", be.window_us, "Window length");
  b->add_option("--rate", be.rate_hz, "Mean event rate in Hz");
  b->add_option("--repr", be.repr, "Representation")->check(CLI::IsMember(repr_names));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }
  if (seed_opt->count() > 0) globals.seed = seed;

  try {
    if (s->parsed()) return cmd_synth(synth, globals);
    if (e->parsed()) return cmd_encode(enc, globals);
    if (v->parsed()) return cmd_eval(ev, globals);
    if (t->parsed()) return cmd_train(tr, globals);
    if (p->parsed()) return cmd_predict(pr, globals);
    if (z->parsed()) return cmd_visualize(vi, globals);
    if (b->parsed()) return cmd_bench(be, globals);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.code() == Errc::Io ? kExitIo : kExitValidation;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
