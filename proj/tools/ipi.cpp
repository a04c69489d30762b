// ipi: dataset generation, ER reconstruction, tomography and evaluation.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ipi/ipi.hpp"

namespace fs = std::filesystem;
using namespace ipi;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << "ipi: " << msg << '\n'; }

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// `--config path` lines "key = value" become "--key=value" right after the
// subcommand name; options keep their last value, so later flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (!path || args.size() < 2) return args;
  std::ifstream f(*path);
  if (!f) throw UsageError("cannot open config file '" + *path + "'");
  std::vector<std::string> injected;
  std::string line;
  for (int lineno = 1; std::getline(f, line); ++lineno) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(*path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

void add_config_flag(CLI::App* sub) {
  // consumed before parsing; declared for --help
  sub->add_option("--config", "file of key=value lines; command-line flags override it");
}

// ---------------------------------------------------------------------------

struct ErFlags {
  ERConfig cfg;
  std::string support = "autocorrelation";
  std::string binarize = "otsu";

  void add(CLI::App* sub) {
    sub->add_option("--iterations", cfg.iterations, "ER iterations per start")->check(CLI::PositiveNumber);
    sub->add_option("--support-threshold", cfg.support_threshold_rel, "support threshold relative to the AC peak")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--support-shape", support, "autocorrelation or box")
        ->check(CLI::IsMember({"autocorrelation", "box"}));
    sub->add_option("--init-seed", cfg.init_seed, "seed of the random initial iterate");
    sub->add_option("--restarts", cfg.restarts, "random starts; lowest final E_F wins")->check(CLI::PositiveNumber);
    sub->add_option("--binarize", binarize, "fixed or otsu")->check(CLI::IsMember({"fixed", "otsu"}));
    sub->add_option("--stall-tolerance", cfg.stall_tolerance, "stop when E_F changes less than this");
    sub->add_option("--stall-window", cfg.stall_window, "over this many iterations")->check(CLI::PositiveNumber);
  }
  ERConfig resolved() const {
    ERConfig c = cfg;
    c.support_shape = support_shape_from_string(support);
    c.binarize_method = binarize_method_from_string(binarize);
    return c;
  }
};

struct NoiseFlags {
  NoiseConfig cfg;
  void add(CLI::App* sub) {
    sub->add_option("--noise-sigma", cfg.gaussian_sigma_rel, "Gaussian sigma relative to the image mean")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--noise-shot", cfg.shot_scale, "photon count at the image maximum, 0 = off")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--noise-bits", cfg.quantize_bits, "quantization bits: 0, 8 or 16")
        ->check(CLI::IsMember({0, 8, 16}));
  }
};

std::vector<Family> parse_families(const std::string& s) {
  if (s == "all") return {kAllFamilies.begin(), kAllFamilies.end()};
  std::vector<Family> out;
  for (const auto& f : split_list(s)) out.push_back(family_from_string(f));
  if (out.empty()) throw UsageError("no families given");
  return out;
}

void ensure_dir(const fs::path& p) {
  if (!p.empty()) fs::create_directories(p);
}

// Foreground = at least half of full scale; values scaled to [0, 1] for MSE.
struct Prediction {
  Mask mask;
  RealImage level;
};

Prediction load_prediction(const fs::path& path) {
  const png::GrayImage g = png::decode(png::read_file(path));
  const double full = g.bit_depth == 16 ? 65535.0 : 255.0;
  Prediction p{Mask(g.pixels.rows(), g.pixels.cols()), RealImage(g.pixels.rows(), g.pixels.cols())};
  for (std::size_t i = 0; i < p.mask.size(); ++i) {
    p.level.data()[i] = g.pixels.data()[i] / full;
    p.mask.data()[i] = g.pixels.data()[i] >= full / 2;
  }
  return p;
}

// ---------------------------------------------------------------------------
// dataset

struct DatasetCmd {
  std::size_t count = 2000;
  std::string families = "all";
  double size_min = kDefaultSizeRange.min_um, size_max = kDefaultSizeRange.max_um;
  double density = kDefaultDensity;
  NoiseFlags noise;
  Seed seed = 0;
  double split_ratio = 0.9;
  std::size_t image_n = 256, object_n = 128;
  unsigned workers = 1;
  std::string out;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("dataset", "generate (speckle, mask) pairs and a manifest");
    add_config_flag(s);
    s->add_option("--count", count, "number of pairs")->check(CLI::PositiveNumber);
    s->add_option("--families", families, "comma list of stick,cross,dendrite,l,t,y or 'all'");
    s->add_option("--size-min", size_min, "smallest Feret diameter, um");
    s->add_option("--size-max", size_max, "largest Feret diameter, um");
    s->add_option("--density", density, "fraction of mask cells that become asperities")
        ->check(CLI::Range(0.0, 1.0));
    noise.add(s);
    s->add_option("--seed", seed, "master seed");
    s->add_option("--split-ratio", split_ratio, "train fraction")->check(CLI::Range(0.0, 1.0));
    s->add_option("--image-n", image_n, "speckle image side, px");
    s->add_option("--object-n", object_n, "object grid side, cells");
    s->add_option("--workers", workers, "generator threads; output does not depend on it")
        ->check(CLI::PositiveNumber);
    s->add_option("--out", out, "output directory")->required();
    s->callback([this] { run(); });
  }

  void run() {
    DatasetConfig c;
    c.count = count;
    c.families = parse_families(families);
    c.size_range = {size_min, size_max};
    c.density = density;
    c.noise = noise.cfg;
    c.master_seed = seed;
    c.split_ratio = split_ratio;
    c.optics.image_n = image_n;
    c.optics.object_n = object_n;
    c.max_span_cells = std::min(120.0, static_cast<double>(object_n) * 120.0 / 128.0);
    validate(c);
    const auto m = generate_dataset(c, out, workers);
    log("wrote " + std::to_string(m.records.size()) + " pairs (" + std::to_string(m.count(Split::Train)) +
        " train, " + std::to_string(m.count(Split::Test)) + " test) to " + out);
  }
};

// ---------------------------------------------------------------------------
// reconstruct-er

void write_trace(const fs::path& path, const std::vector<double>& trace) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "iteration,E_F\n";
  f.precision(17);
  for (std::size_t k = 0; k < trace.size(); ++k) f << k << ',' << trace[k] << '\n';
}

struct ReconstructCmd {
  std::string input, from_mask, dataset;
  std::optional<std::size_t> id;
  std::string split = "test";
  ErFlags er;
  std::string out;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("reconstruct-er", "error-reduction shape retrieval from speckle images");
    add_config_flag(s);
    auto* in = s->add_option("--input", input, "speckle PNG")->check(CLI::ExistingFile);
    auto* fm = s->add_option("--from-mask", from_mask, "mask PNG; reconstruct from its exact autocorrelation")
                   ->check(CLI::ExistingFile);
    auto* ds = s->add_option("--dataset", dataset, "dataset directory")->check(CLI::ExistingDirectory);
    s->add_option("--id", id, "sample id in --dataset; without it every sample of --split is processed")
        ->needs(ds);
    s->add_option("--split", split, "train, test or all (with --dataset and no --id)")
        ->check(CLI::IsMember({"train", "test", "all"}));
    in->excludes(fm)->excludes(ds);
    fm->excludes(ds);
    er.add(s);
    s->add_option("--out", out, "output directory: {name}.png mask and {name}_trace.csv")->required();
    s->callback([this] { run(); });
  }

  void one(const RealImage& data, bool exact, const std::string& name) {
    const ERConfig cfg = er.resolved();
    const Reconstruction r = exact ? reconstruct_from_object(data, cfg) : reconstruct_from_speckle(data, cfg);
    if (r.clamped) log(name + ": " + std::to_string(r.clamped) + " negative spectrum values clamped");
    png::write_file(fs::path(out) / (name + ".png"), png::encode_mask(r.mask));
    write_trace(fs::path(out) / (name + "_trace.csv"), r.er.error_trace);
  }

  void run() {
    const int sources = !input.empty() + !from_mask.empty() + !dataset.empty();
    if (sources != 1) throw UsageError("give exactly one of --input, --from-mask, --dataset");
    ensure_dir(out);
    if (!input.empty()) {
      const png::GrayImage g = png::decode(png::read_file(input));
      RealImage img(g.pixels.rows(), g.pixels.cols());
      std::copy(g.pixels.begin(), g.pixels.end(), img.begin());
      one(img, false, fs::path(input).stem().string());
      return;
    }
    if (!from_mask.empty()) {
      const Mask m = png::decode_mask(png::read_file(from_mask));
      RealImage img(m.rows(), m.cols());
      std::copy(m.begin(), m.end(), img.begin());
      one(img, true, fs::path(from_mask).stem().string());
      return;
    }
    const DatasetManifest m = load_manifest(dataset);
    std::vector<std::size_t> ids;
    if (id) {
      (void)m.find(*id);
      ids.push_back(*id);
    } else {
      for (const auto& r : m.records)
        if (split == "all" || split == to_string(r.split)) ids.push_back(r.id);
    }
    for (std::size_t i : ids) {
      const SamplePair p = read_pair(dataset, m, i);
      one(p.speckle, false, id_name(i));
    }
    log("reconstructed " + std::to_string(ids.size()) + " sample(s) into " + out);
  }
};

// ---------------------------------------------------------------------------
// tomo

struct TomoCmd {
  std::string xy, yz, zx, out;
  std::optional<std::size_t> n;
  bool align = false;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("tomo", "visual hull of three orthogonal masks");
    add_config_flag(s);
    s->add_option("--xy", xy, "XY mask PNG, indexed (x, y)")->required()->check(CLI::ExistingFile);
    s->add_option("--yz", yz, "YZ mask PNG, indexed (y, z)")->required()->check(CLI::ExistingFile);
    s->add_option("--zx", zx, "ZX mask PNG, indexed (z, x)")->required()->check(CLI::ExistingFile);
    s->add_option("--n", n, "expected mask side");
    s->add_flag("--align", align, "center each view and resolve per-view reflections first");
    s->add_option("--out", out, "output directory")->required();
    s->callback([this] { run(); });
  }

  void run() {
    std::array<Mask, 3> m{png::decode_mask(png::read_file(xy)), png::decode_mask(png::read_file(yz)),
                          png::decode_mask(png::read_file(zx))};
    const std::size_t side = m[0].rows();
    for (const auto& k : m)
      if (!k.square() || k.rows() != side) throw UsageError("masks must be square and of equal size");
    if (n && *n != side) throw UsageError("masks are " + std::to_string(side) + " px, --n says " + std::to_string(*n));
    constexpr std::array<Axis, 3> axes{Axis::XY, Axis::YZ, Axis::ZX};
    for (int k = 0; k < 3; ++k)
      if (count_nonzero(m[k]) == 0) log(std::string("warning: ") + to_string(axes[k]) + " mask is empty");

    VoxelGrid hull;
    nlohmann::json meta = {{"n", side}, {"axes", "XY(x,y) YZ(y,z) ZX(z,x)"}, {"aligned", align}};
    if (align) {
      const AlignedHull a = aligned_visual_hull(m[0], m[1], m[2]);
      hull = a.hull;
      meta["reflected"] = {a.reflected[0], a.reflected[1], a.reflected[2]};
      meta["combination"] = a.combination;
      meta["score"] = a.score;
    } else {
      hull = visual_hull(m[0], m[1], m[2]);
    }
    meta["voxels"] = hull.count();

    const fs::path dir(out);
    ensure_dir(dir / "slices");
    {
      std::ofstream f(dir / "hull.rle");
      if (!f) throw IoError("cannot write " + (dir / "hull.rle").string());
      write_run_length(f, hull);
    }
    for (std::size_t z = 0; z < side; ++z) {
      char name[32];
      std::snprintf(name, sizeof name, "z%04zu.png", z);
      png::write_file(dir / "slices" / name, png::encode_mask(slice_z(hull, z)));
    }
    for (Axis a : axes) {
      std::string name = to_string(a);
      std::transform(name.begin(), name.end(), name.begin(), ::tolower);
      png::write_file(dir / ("reproject_" + name + ".png"), png::encode_mask(reproject(hull, a)));
    }
    std::ofstream(dir / "hull.json") << meta.dump(2) << '\n';
    log("hull has " + std::to_string(hull.count()) + " voxels");
  }
};

// ---------------------------------------------------------------------------
// eval

struct EvalCmd {
  std::string dataset, predictions, out, method = "pred", split = "all";

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("eval", "score predicted masks against dataset truth");
    add_config_flag(s);
    s->add_option("--dataset", dataset, "dataset directory (manifest)")->required()->check(CLI::ExistingDirectory);
    s->add_option("--predictions", predictions,
                  "directory of {id:06}.png; subdirectories are scored as separate methods")
        ->required()
        ->check(CLI::ExistingDirectory);
    s->add_option("--method", method, "method name for PNGs directly inside --predictions");
    s->add_option("--split", split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
    s->add_option("--out", out, "output directory")->required();
    s->callback([this] { run(); });
  }

  static std::vector<std::pair<std::size_t, fs::path>> pngs_in(const fs::path& dir) {
    std::vector<std::pair<std::size_t, fs::path>> out;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file() || e.path().extension() != ".png") continue;
      const std::string stem = e.path().stem().string();
      if (stem.empty() || !std::all_of(stem.begin(), stem.end(), ::isdigit)) continue;
      out.emplace_back(std::stoul(stem), e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  void run() {
    const DatasetManifest m = load_manifest(dataset);
    std::map<std::string, std::vector<std::pair<std::size_t, fs::path>>> methods;
    if (auto direct = pngs_in(predictions); !direct.empty()) methods[method] = std::move(direct);
    for (const auto& e : fs::directory_iterator(predictions))
      if (e.is_directory())
        if (auto sub = pngs_in(e.path()); !sub.empty()) methods[e.path().filename().string()] = std::move(sub);
    if (methods.empty()) throw UsageError("no {id:06}.png predictions in '" + predictions + "'");

    const fs::path dir(out);
    std::vector<EvalRow> rows;
    for (const auto& [name, files] : methods) {
      ensure_dir(dir / "diff" / name);
      for (const auto& [id, path] : files) {
        const SampleRecord& rec = m.find(id);
        if (split != "all" && split != to_string(rec.split)) continue;
        const Mask truth = read_pair(dataset, m, id).mask;
        const Prediction p = load_prediction(path);
        if (!p.mask.same_shape(truth)) throw std::runtime_error(path.string() + ": size differs from the truth mask");
        EvalRow r{id_name(id), to_string(rec.family), name, 0.0, 0.0, 0.0, ""};
        try {
          r.iou = iou(p.mask, truth);
          const AlignedIou a = best_aligned_iou(p.mask, truth);
          r.aligned_iou = a.iou;
          r.transform = a.transform.str();
        } catch (const UndefinedMetricError&) {
          r.transform = "undefined";
        }
        // difference and MSE against the truth moved onto the prediction
        const Mask moved = r.transform == "undefined" ? truth : apply(best_aligned_iou(p.mask, truth).transform, truth);
        RealImage t(truth.rows(), truth.cols());
        std::copy(moved.begin(), moved.end(), t.begin());
        r.mse = mse(t, p.level);
        png::write_file(dir / "diff" / name / (id_name(id) + ".png"),
                        png::encode_gray8(render_difference(difference_image(t, p.level))));
        rows.push_back(r);
      }
    }
    if (rows.empty()) throw UsageError("no predictions match the manifest and split");
    ensure_dir(dir);
    std::ofstream f(dir / "eval.csv");
    write_eval_csv(f, rows);
    std::ofstream s(dir / "summary.csv");
    write_family_summary_csv(s, rows);
    log("scored " + std::to_string(rows.size()) + " prediction(s) from " + std::to_string(methods.size()) +
        " method(s)");
  }
};

// ---------------------------------------------------------------------------
// speckle (single image, for debugging)

struct SpeckleCmd {
  std::string family = "stick";
  double size = 1000.0;
  Seed seed = 0;
  double density = kDefaultDensity;
  NoiseFlags noise;
  std::size_t image_n = 256, object_n = 128;
  double cell_um = 0;
  std::string out, mask_out, ac_out;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("speckle", "synthesize one speckle image");
    add_config_flag(s);
    s->add_option("--family", family, "stick, cross, dendrite, l, t or y");
    s->add_option("--size", size, "Feret diameter, um")->check(CLI::PositiveNumber);
    s->add_option("--seed", seed, "seed for shape, pose, asperities and noise");
    s->add_option("--density", density, "asperity density")->check(CLI::Range(0.0, 1.0));
    noise.add(s);
    s->add_option("--image-n", image_n, "image side, px");
    s->add_option("--object-n", object_n, "object grid side, cells");
    s->add_option("--cell-um", cell_um, "cell size, um (default: a 1500 um particle fits 120 cells)");
    s->add_option("--out", out, "16-bit speckle PNG")->required();
    s->add_option("--mask-out", mask_out, "mask PNG at image size");
    s->add_option("--ac-out", ac_out, "16-bit |autocorrelation| PNG");
    s->callback([this] { run(); });
  }

  void run() {
    GridSpec grid = default_object_grid(kDefaultSizeRange, object_n, std::min(120.0, object_n * 120.0 / 128.0));
    if (cell_um > 0) grid.cell_um = cell_um;
    OpticsConfig optics;
    optics.image_n = image_n;
    optics.object_n = object_n;
    const ShapeSpec shape = sample_shape(family_from_string(family), {size, size}, derive_seed(seed, 0, kShapeStream));
    const Pose pose = sample_visible_pose(derive_seed(seed, 0, kPoseStream)).pose;
    const Mask mask = rasterize_projection(shape, pose, grid);
    const AsperitySet asp = sample_asperities(mask, density, derive_seed(seed, 0, kAsperityStream));
    NoiseConfig nc = noise.cfg;
    nc.seed = derive_seed(seed, 0, kNoiseStream);
    const RealImage img = add_noise(synthesize_speckle(asp, optics), nc);
    png::write_file(out, png::encode_scaled16(img).bytes);
    if (!mask_out.empty()) png::write_file(mask_out, png::encode_mask(embed_centered(mask, image_n, image_n)));
    if (!ac_out.empty()) png::write_file(ac_out, png::encode_scaled16(autocorrelation_map(img).magnitude()).bytes);
    log(std::to_string(asp.size()) + " asperities");
  }
};

// ---------------------------------------------------------------------------
// plot-loss

struct LossRow {
  double epoch, train, test, lr;
};

std::vector<LossRow> read_loss_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || trim(line) != "epoch,train_mse,test_mse,lr")
    throw std::runtime_error(path + ": expected header epoch,train_mse,test_mse,lr");
  std::vector<LossRow> rows;
  for (int lineno = 2; std::getline(f, line); ++lineno) {
    if (trim(line).empty()) continue;
    const auto cells = split_list(line);
    if (cells.size() != 4) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 4 columns");
    rows.push_back({std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])});
  }
  if (rows.empty()) throw std::runtime_error(path + ": no rows");
  return rows;
}

// Centered boxcar of `width` epochs, truncated at the ends.
std::vector<double> boxcar(const std::vector<double>& v, int width) {
  const long h = width / 2, n = static_cast<long>(v.size());
  std::vector<double> out(v.size());
  for (long i = 0; i < n; ++i) {
    double s = 0;
    long k = 0;
    for (long j = std::max(0L, i - h); j <= std::min(n - 1, i + h); ++j, ++k) s += v[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(k);
  }
  return out;
}

struct PlotLossCmd {
  std::string log_path, out;
  int window = 7;

  void add(CLI::App& app) {
    auto* s = app.add_subcommand("plot-loss", "smooth a training loss log and plot it as SVG");
    add_config_flag(s);
    s->add_option("--log", log_path, "CSV with epoch,train_mse,test_mse,lr")->required()->check(CLI::ExistingFile);
    s->add_option("--window", window, "boxcar width in epochs")->check(CLI::PositiveNumber);
    s->add_option("--out", out, "output prefix: {out}.csv and {out}.svg")->required();
    s->callback([this] { run(); });
  }

  void run() {
    const auto rows = read_loss_log(log_path);
    std::vector<double> tr, te;
    for (const auto& r : rows) tr.push_back(r.train), te.push_back(r.test);
    const auto str = boxcar(tr, window), ste = boxcar(te, window);
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (!std::isfinite(str[i]) || !std::isfinite(ste[i])) throw std::runtime_error("loss log has non-finite values");

    ensure_dir(fs::path(out).parent_path());
    std::ofstream csv(out + ".csv");
    csv << "epoch,train_mse,test_mse,train_smooth,test_smooth\n";
    csv.precision(10);
    for (std::size_t i = 0; i < rows.size(); ++i)
      csv << rows[i].epoch << ',' << tr[i] << ',' << te[i] << ',' << str[i] << ',' << ste[i] << '\n';

    // log-scale y axis
    const double W = 640, H = 400, m = 50;
    double lo = 1e300, hi = -1e300;
    for (double v : tr)
      if (v > 0) lo = std::min(lo, v), hi = std::max(hi, v);
    for (double v : te)
      if (v > 0) lo = std::min(lo, v), hi = std::max(hi, v);
    if (!(lo < hi)) lo = lo / 10, hi = hi * 10;
    const double e0 = rows.front().epoch, e1 = std::max(rows.back().epoch, e0 + 1);
    auto px = [&](double e) { return m + (e - e0) / (e1 - e0) * (W - 2 * m); };
    auto py = [&](double v) {
      return H - m - (std::log10(std::max(v, lo)) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) * (H - 2 * m);
    };
    auto path = [&](const std::vector<double>& v) {
      std::ostringstream os;
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " L" : "M") << px(rows[i].epoch) << ',' << py(v[i]);
      return os.str();
    };
    std::ofstream svg(out + ".svg");
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<path d=\"" << path(tr) << "\" stroke=\"#9ecae1\" fill=\"none\"/>\n"
        << "<path d=\"" << path(te) << "\" stroke=\"#fdae6b\" fill=\"none\"/>\n"
        << "<path d=\"" << path(str) << "\" stroke=\"#08519c\" stroke-width=\"2\" fill=\"none\"/>\n"
        << "<path d=\"" << path(ste) << "\" stroke=\"#d94801\" stroke-width=\"2\" fill=\"none\"/>\n"
        << "<text x=\"" << m << "\" y=\"20\" font-size=\"12\">MSE (log), train blue, test orange, " << window
        << "-epoch boxcar</text>\n"
        << "<text x=\"" << m << "\" y=\"" << H - 10 << "\" font-size=\"12\">epoch " << e0 << " - " << e1
        << "</text>\n</svg>\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interferometric particle imaging toolkit", "ipi"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  DatasetCmd dataset;
  ReconstructCmd reconstruct;
  TomoCmd tomo;
  EvalCmd eval;
  SpeckleCmd speckle;
  PlotLossCmd plot_loss;
  dataset.add(app);
  reconstruct.add(app);
  tomo.add(app);
  eval.add(app);
  speckle.add(app);
  plot_loss.add(app);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(std::move(rev));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    log(e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    log(e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    log(e.what());
    return 2;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
  return 0;
}
