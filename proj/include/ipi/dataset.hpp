#pragma once

// Synthetic (speckle, mask) pair generation with a JSON-lines manifest.
//
// Per-sample seeds: stream k of sample i is derive_seed(master_seed, i, k)
// with k = 1 shape, 2 pose, 3 asperities, 4 noise. Any sample can be
// regenerated from its record and the header alone.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ipi/digest.hpp"
#include "ipi/errors.hpp"
#include "ipi/grid.hpp"
#include "ipi/optics.hpp"
#include "ipi/png_io.hpp"
#include "ipi/rng.hpp"
#include "ipi/shapes.hpp"

namespace ipi {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kManifestVersion = 1;

enum SeedStream : std::uint64_t { kShapeStream = 1, kPoseStream = 2, kAsperityStream = 3, kNoiseStream = 4 };

struct DatasetConfig {
  std::size_t count = 2000;
  std::vector<Family> families{kAllFamilies.begin(), kAllFamilies.end()};
  SizeRange size_range = kDefaultSizeRange;
  double density = kDefaultDensity;
  NoiseConfig noise;  ///< seed field ignored, noise seeds are per sample
  Seed master_seed = 0;
  double split_ratio = 0.9;
  OpticsConfig optics;
  double max_span_cells = 120.0;
  double min_area_ratio = 0.01;

  GridSpec object_grid() const { return default_object_grid(size_range, optics.object_n, max_span_cells); }
};

inline void validate(const DatasetConfig& c) {
  if (c.count < 1) throw std::invalid_argument("dataset: count must be >= 1");
  if (c.families.empty()) throw std::invalid_argument("dataset: at least one family is required");
  if (!(c.density > 0.0 && c.density <= 1.0)) throw std::invalid_argument("dataset: density must be in (0, 1]");
  if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) throw std::invalid_argument("dataset: split ratio must be in (0, 1)");
  if (!(c.min_area_ratio >= 0.0 && c.min_area_ratio < 1.0))
    throw std::invalid_argument("dataset: min area ratio must be in [0, 1)");
  if (c.optics.object_n > c.optics.image_n / 2)
    throw std::invalid_argument("dataset: object grid must be at most half the image side");
  if (!(c.max_span_cells > 0.0 && c.max_span_cells <= static_cast<double>(c.optics.object_n) - 4))
    throw std::invalid_argument("dataset: max span must leave a margin inside the object grid");
  validate(c.noise);
  (void)sample_shape(Family::Stick, c.size_range, 0);  // range checks
  validate(c.object_grid());
}

enum class Split { Train, Test };

inline const char* to_string(Split s) { return s == Split::Train ? "train" : "test"; }

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw CorruptDatasetError("unknown split '" + s + "'");
}

struct SampleSeeds {
  Seed shape = 0, pose = 0, asperity = 0, noise = 0;
};

struct SampleRecord {
  std::size_t id = 0;
  Family family = Family::Stick;
  double feret_um = 0;
  ShapeParams params;
  Quaternion pose;
  std::size_t asperity_count = 0;
  double density = 0;
  SampleSeeds seeds;
  NoiseConfig noise;
  double png_scale = 1.0;
  std::string speckle_sha256;
  std::string mask_sha256;
  Split split = Split::Train;
};

struct DatasetManifest {
  int version = kManifestVersion;
  DatasetConfig config;
  std::vector<SampleRecord> records;

  const SampleRecord& find(std::size_t id) const {
    // records are stored in id order, but do not rely on it for foreign files
    if (id < records.size() && records[id].id == id) return records[id];
    for (const auto& r : records)
      if (r.id == id) return r;
    throw std::out_of_range("dataset: unknown id " + std::to_string(id));
  }
  std::size_t count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [s](const auto& r) { return r.split == s; }));
  }
};

inline std::string id_name(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", id);
  return buf;
}

inline fs::path speckle_path(const fs::path& dir, std::size_t id) { return dir / "speckle" / (id_name(id) + ".png"); }
inline fs::path mask_path(const fs::path& dir, std::size_t id) { return dir / "mask" / (id_name(id) + ".png"); }

inline SampleSeeds derive_sample_seeds(Seed master, std::size_t index) {
  return {derive_seed(master, index, kShapeStream), derive_seed(master, index, kPoseStream),
          derive_seed(master, index, kAsperityStream), derive_seed(master, index, kNoiseStream)};
}

inline Family family_for_index(const DatasetConfig& c, std::size_t index) {
  return c.families[index % c.families.size()];
}

// ---------------------------------------------------------------------------
// Split

namespace detail {

inline void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

}  // namespace detail

/// Stratified split: ⌊ratio·count⌋ train samples in total, allotted to each
/// family as ⌊ratio·n_f⌋ plus largest remainders; within a family the ids
/// are shuffled with a seeded Fisher-Yates and the first ones go to train.
/// `families[i]` is the family of sample i. Returns one split per sample.
inline std::vector<Split> assign_splits(const std::vector<Family>& families, double ratio, Seed seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split: ratio must be in (0, 1)");
  std::map<Family, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < families.size(); ++i) groups[families[i]].push_back(i);
  const auto total = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(families.size())));

  struct Quota {
    Family f;
    std::size_t base;
    double rem;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [f, ids] : groups) {
    const double exact = ratio * static_cast<double>(ids.size());
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({f, base, exact - static_cast<double>(base)});
    assigned += base;
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return quotas[a].rem > quotas[b].rem; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++quotas[order[k % order.size()]].base;

  std::vector<Split> out(families.size(), Split::Test);
  Rng rng(seed);
  for (const auto& q : quotas) {
    std::vector<std::size_t> ids = groups[q.f];
    detail::shuffle(ids, rng);
    for (std::size_t k = 0; k < q.base && k < ids.size(); ++k) out[ids[k]] = Split::Train;
  }
  return out;
}

inline DatasetManifest split_manifest(DatasetManifest m, double ratio, Seed seed) {
  std::vector<Family> fam;
  fam.reserve(m.records.size());
  for (const auto& r : m.records) fam.push_back(r.family);
  const auto splits = assign_splits(fam, ratio, seed);
  for (std::size_t i = 0; i < m.records.size(); ++i) m.records[i].split = splits[i];
  m.config.split_ratio = ratio;
  return m;
}

// ---------------------------------------------------------------------------
// Sample synthesis

struct SampleFiles {
  SampleRecord record;
  png::Bytes speckle_png;
  png::Bytes mask_png;
};

/// Everything for sample `index` except its split.
inline SampleFiles synthesize_sample(const DatasetConfig& c, std::size_t index) {
  const GridSpec grid = c.object_grid();
  SampleRecord r;
  r.id = index;
  r.family = family_for_index(c, index);
  r.seeds = derive_sample_seeds(c.master_seed, index);
  r.density = c.density;
  r.noise = c.noise;
  r.noise.seed = r.seeds.noise;

  const ShapeSpec shape = sample_shape(r.family, c.size_range, r.seeds.shape);
  // Thin particles seen nearly edge-on can fall between cell centers on a
  // coarse grid; such poses are rejected like the invisible ones.
  Pose pose;
  Mask mask;
  Seed ps = r.seeds.pose;
  for (int tries = 0;; ++tries) {
    if (tries == 1000) throw std::runtime_error("dataset: particle " + id_name(index) + " never covers a grid cell");
    const SampledPose sp = sample_visible_pose(ps, c.min_area_ratio);
    pose = sp.pose;
    mask = rasterize_projection(shape, pose, grid);
    if (std::find(mask.begin(), mask.end(), std::uint8_t{1}) != mask.end()) break;
    ps = sp.seed_used + 1;
  }
  r.feret_um = shape.feret_um;
  r.params = shape.params;
  r.pose = pose.q;

  const AsperitySet asp = sample_asperities(mask, c.density, r.seeds.asperity);
  r.asperity_count = asp.size();
  const RealImage speckle = add_noise(synthesize_speckle(asp, c.optics), r.noise);

  SampleFiles out;
  auto scaled = png::encode_scaled16(speckle);
  r.png_scale = scaled.scale;
  out.speckle_png = std::move(scaled.bytes);
  out.mask_png = png::encode_mask(embed_centered(mask, c.optics.image_n, c.optics.image_n));
  r.speckle_sha256 = sha256_hex(out.speckle_png);
  r.mask_sha256 = sha256_hex(out.mask_png);
  out.record = std::move(r);
  return out;
}

/// Rebuilds the files of a manifest record; byte-identical to the original.
inline SampleFiles regenerate_sample(const DatasetManifest& m, std::size_t id) {
  const SampleRecord& rec = m.find(id);
  SampleFiles f = synthesize_sample(m.config, rec.id);
  f.record.split = rec.split;
  return f;
}

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(const NoiseConfig& n) {
  return {{"gaussian_sigma_rel", n.gaussian_sigma_rel},
          {"shot_scale", n.shot_scale},
          {"quantize_bits", n.quantize_bits},
          {"seed", n.seed}};
}

inline NoiseConfig noise_from_json(const json& j) {
  NoiseConfig n;
  n.gaussian_sigma_rel = j.at("gaussian_sigma_rel").get<double>();
  n.shot_scale = j.at("shot_scale").get<double>();
  n.quantize_bits = j.at("quantize_bits").get<int>();
  n.seed = j.value("seed", Seed{0});
  return n;
}

inline json to_json(const SampleRecord& r) {
  return {{"id", r.id},
          {"family", to_string(r.family)},
          {"feret_um", r.feret_um},
          {"width_frac", r.params.width_frac},
          {"arm_ratio", r.params.arm_ratio},
          {"branch_frac", r.params.branch_frac},
          {"pose", {r.pose.w, r.pose.x, r.pose.y, r.pose.z}},
          {"asperity_count", r.asperity_count},
          {"density", r.density},
          {"seeds", {{"shape", r.seeds.shape}, {"pose", r.seeds.pose}, {"asperity", r.seeds.asperity}, {"noise", r.seeds.noise}}},
          {"noise", to_json(r.noise)},
          {"png_scale", r.png_scale},
          {"speckle_sha256", r.speckle_sha256},
          {"mask_sha256", r.mask_sha256},
          {"split", to_string(r.split)}};
}

inline SampleRecord record_from_json(const json& j) {
  SampleRecord r;
  r.id = j.at("id").get<std::size_t>();
  r.family = family_from_string(j.at("family").get<std::string>());
  r.feret_um = j.at("feret_um").get<double>();
  r.params = {j.at("width_frac").get<double>(), j.at("arm_ratio").get<double>(), j.at("branch_frac").get<double>()};
  const auto& q = j.at("pose");
  r.pose = {q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>()};
  r.asperity_count = j.at("asperity_count").get<std::size_t>();
  r.density = j.at("density").get<double>();
  const auto& s = j.at("seeds");
  r.seeds = {s.at("shape").get<Seed>(), s.at("pose").get<Seed>(), s.at("asperity").get<Seed>(), s.at("noise").get<Seed>()};
  r.noise = noise_from_json(j.at("noise"));
  r.png_scale = j.at("png_scale").get<double>();
  r.speckle_sha256 = j.at("speckle_sha256").get<std::string>();
  r.mask_sha256 = j.at("mask_sha256").get<std::string>();
  r.split = split_from_string(j.at("split").get<std::string>());
  return r;
}

inline json header_json(const DatasetManifest& m) {
  const auto& c = m.config;
  const GridSpec g = c.object_grid();
  json fam = json::array();
  for (Family f : c.families) fam.push_back(to_string(f));
  return {{"version", m.version},
          {"count", c.count},
          {"master_seed", c.master_seed},
          {"split_ratio", c.split_ratio},
          {"families", fam},
          {"size_range_um", {c.size_range.min_um, c.size_range.max_um}},
          {"density", c.density},
          {"noise", to_json(c.noise)},
          {"max_span_cells", c.max_span_cells},
          {"min_area_ratio", c.min_area_ratio},
          {"grid", {{"n", g.n}, {"cell_um", g.cell_um}}},
          {"optics",
           {{"image_n", c.optics.image_n},
            {"object_n", c.optics.object_n},
            {"sensor_px", {c.optics.sensor_width_px, c.optics.sensor_height_px}},
            {"pixel_pitch_um", c.optics.pixel_pitch_um},
            {"objective_focal_mm", c.optics.objective_focal_mm}}}};
}

inline DatasetConfig config_from_header(const json& h) {
  DatasetConfig c;
  c.count = h.at("count").get<std::size_t>();
  c.master_seed = h.at("master_seed").get<Seed>();
  c.split_ratio = h.at("split_ratio").get<double>();
  c.families.clear();
  for (const auto& f : h.at("families")) c.families.push_back(family_from_string(f.get<std::string>()));
  c.size_range = {h.at("size_range_um").at(0).get<double>(), h.at("size_range_um").at(1).get<double>()};
  c.density = h.at("density").get<double>();
  c.noise = noise_from_json(h.at("noise"));
  c.max_span_cells = h.at("max_span_cells").get<double>();
  c.min_area_ratio = h.at("min_area_ratio").get<double>();
  const auto& o = h.at("optics");
  c.optics.image_n = o.at("image_n").get<std::size_t>();
  c.optics.object_n = o.at("object_n").get<std::size_t>();
  c.optics.sensor_width_px = o.at("sensor_px").at(0).get<std::size_t>();
  c.optics.sensor_height_px = o.at("sensor_px").at(1).get<std::size_t>();
  c.optics.pixel_pitch_um = o.at("pixel_pitch_um").get<double>();
  c.optics.objective_focal_mm = o.at("objective_focal_mm").get<double>();
  return c;
}

namespace detail {

// Write to a sibling temporary, then rename over the target.
inline void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
    f << text;
    if (!f) throw IoError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

}  // namespace detail

inline void write_manifest(const fs::path& dir, const DatasetManifest& m) {
  std::ostringstream lines;
  for (const auto& r : m.records) lines << to_json(r).dump() << '\n';
  detail::write_atomic(dir / "manifest.jsonl", lines.str());
  detail::write_atomic(dir / "manifest.header.json", header_json(m).dump(2) + "\n");
}

inline DatasetManifest load_manifest(const fs::path& dir) {
  DatasetManifest m;
  try {
    std::ifstream hf(dir / "manifest.header.json");
    if (!hf) throw IoError("cannot open '" + (dir / "manifest.header.json").string() + "'");
    const json h = json::parse(hf);
    m.version = h.at("version").get<int>();
    if (m.version != kManifestVersion) throw CorruptDatasetError("unsupported manifest version " + std::to_string(m.version));
    m.config = config_from_header(h);
    std::ifstream lf(dir / "manifest.jsonl");
    if (!lf) throw IoError("cannot open '" + (dir / "manifest.jsonl").string() + "'");
    std::string line;
    while (std::getline(lf, line))
      if (!line.empty()) m.records.push_back(record_from_json(json::parse(line)));
  } catch (const json::exception& e) {
    throw CorruptDatasetError(std::string("manifest: ") + e.what());
  }
  if (m.records.size() != m.config.count)
    throw CorruptDatasetError("manifest: " + std::to_string(m.records.size()) + " records, header says " +
                              std::to_string(m.config.count));
  return m;
}

// ---------------------------------------------------------------------------
// Generation

inline fs::path partial_marker(const fs::path& dir) { return dir / ".partial"; }

/// Generates `config.count` pairs under out_dir using `workers` threads.
/// A `.partial` marker exists while files are being written and stays
/// behind if generation fails; the manifest is written last.
inline DatasetManifest generate_dataset(const DatasetConfig& config, const fs::path& out_dir, unsigned workers = 1) {
  validate(config);
  workers = std::max(1u, workers);
  fs::create_directories(out_dir / "speckle");
  fs::create_directories(out_dir / "mask");
  { std::ofstream(partial_marker(out_dir)) << "generation in progress\n"; }

  DatasetManifest m;
  m.config = config;
  m.records.resize(config.count);
  std::vector<Family> fam(config.count);
  for (std::size_t i = 0; i < config.count; ++i) fam[i] = family_for_index(config, i);
  const auto splits = assign_splits(fam, config.split_ratio, config.master_seed);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i; !failed && (i = next++) < config.count;) {
      try {
        SampleFiles f = synthesize_sample(config, i);
        f.record.split = splits[i];
        png::write_file(speckle_path(out_dir, i), f.speckle_png);
        png::write_file(mask_path(out_dir, i), f.mask_png);
        m.records[i] = std::move(f.record);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  write_manifest(out_dir, m);
  fs::remove(partial_marker(out_dir));
  return m;
}

// ---------------------------------------------------------------------------
// Reading

struct SamplePair {
  RealImage speckle;
  Mask mask;
};

inline png::Bytes read_verified(const fs::path& path, const std::string& sha) {
  if (!fs::exists(path)) throw CorruptDatasetError("missing file '" + path.string() + "'");
  png::Bytes b = png::read_file(path);
  if (sha256_hex(b) != sha) throw CorruptDatasetError("checksum mismatch for '" + path.string() + "'");
  return b;
}

/// Speckle descaled by the recorded factor, mask at image size.
inline SamplePair read_pair(const fs::path& dir, const DatasetManifest& m, std::size_t id) {
  const SampleRecord& r = m.find(id);
  SamplePair p;
  p.speckle = png::decode_scaled(read_verified(speckle_path(dir, id), r.speckle_sha256), r.png_scale);
  p.mask = png::decode_mask(read_verified(mask_path(dir, id), r.mask_sha256));
  return p;
}

}  // namespace ipi
