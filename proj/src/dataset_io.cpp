#include "scfnet/dataset_io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace scfnet {

using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

bool all_finite(const Windowf& m) {
  return m.allFinite();
}

}  // namespace

std::vector<Violation> validate_dataset(const Dataset& dataset) {
  std::vector<Violation> out;
  if (dataset.class_names.empty()) out.push_back({"", "class_names must be non-empty"});
  if (dataset.sample_rate_hz <= 0.0) out.push_back({"", "sample_rate_hz must be positive"});
  if (dataset.window_samples < 1) out.push_back({"", "window_samples must be >= 1"});
  if (dataset.channel_names.empty()) out.push_back({"", "channel_names must be non-empty"});

  std::set<std::string> names(dataset.channel_names.begin(), dataset.channel_names.end());
  if (names.size() != dataset.channel_names.size())
    out.push_back({"", "channel names must be unique"});

  std::set<std::string> seen_ids;
  for (const Segment& s : dataset.segments) {
    if (!seen_ids.insert(s.id).second)
      out.push_back({s.id, "duplicate segment id"});
    if (s.data.rows() != static_cast<Eigen::Index>(dataset.channel_names.size()))
      out.push_back({s.id, "channel count does not match dataset channel_names"});
    if (s.data.cols() != dataset.window_samples)
      out.push_back({s.id, "sample count does not match dataset window_samples"});
    // Empty votes mark an unlabeled segment; anything else must cover every class.
    if (!s.votes.empty() && s.votes.size() != dataset.class_names.size())
      out.push_back({s.id, "votes length does not match class count"});
    for (int v : s.votes) {
      if (v < 0) {
        out.push_back({s.id, "negative vote count"});
        break;
      }
    }
    if (!all_finite(s.data)) out.push_back({s.id, "non-finite sample data"});
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& directory) {
  auto violations = validate_dataset(dataset);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw ValidationError("dataset invariant violated" +
                          (v.segment_id.empty() ? std::string() : " (segment " + v.segment_id + ")") +
                          ": " + v.rule);
  }

  std::filesystem::create_directories(directory / "segments");

  json manifest;
  manifest["version"] = kManifestVersion;
  manifest["sample_rate_hz"] = dataset.sample_rate_hz;
  manifest["window_samples"] = dataset.window_samples;
  manifest["channel_names"] = dataset.channel_names;
  manifest["class_names"] = dataset.class_names;
  manifest["segments"] = json::array();

  for (const Segment& s : dataset.segments) {
    std::string rel = "segments/" + s.id + ".f32";
    json entry;
    entry["id"] = s.id;
    entry["patient_id"] = s.patient_id;
    entry["file"] = rel;
    entry["votes"] = s.votes;
    manifest["segments"].push_back(entry);

    std::ofstream blob(directory / rel, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot open blob for writing: " + (directory / rel).string());
    // Channel-major rows: each channel's row of the (col-major) Eigen matrix
    // is written as one contiguous run.
    for (Eigen::Index c = 0; c < s.data.rows(); ++c) {
      for (Eigen::Index t = 0; t < s.data.cols(); ++t) {
        float v = s.data(c, t);
        blob.write(reinterpret_cast<const char*>(&v), sizeof(float));
      }
    }
    if (!blob) throw std::runtime_error("write failure on blob " + rel);
  }

  std::ofstream mf(directory / "manifest.json");
  if (!mf) throw std::runtime_error("cannot write manifest.json in " + directory.string());
  mf << manifest.dump(2) << "\n";
  if (!mf) throw std::runtime_error("write failure on manifest.json");
}

Dataset load_dataset(const std::filesystem::path& directory) {
  std::ifstream mf(directory / "manifest.json");
  if (!mf) throw std::runtime_error("missing manifest.json in " + directory.string());
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest.json: " + std::string(e.what()));
  }

  int version = manifest.at("version").get<int>();
  if (version != kManifestVersion) {
    throw std::runtime_error("unsupported manifest version " + std::to_string(version) +
                             " (expected " + std::to_string(kManifestVersion) + ")");
  }

  Dataset ds;
  ds.sample_rate_hz = manifest.at("sample_rate_hz").get<double>();
  ds.window_samples = manifest.at("window_samples").get<int>();
  ds.channel_names = manifest.at("channel_names").get<std::vector<std::string>>();
  ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();

  const auto n_channels = static_cast<Eigen::Index>(ds.channel_names.size());
  const auto window = static_cast<Eigen::Index>(ds.window_samples);

  for (const json& entry : manifest.at("segments")) {
    Segment s;
    s.id = entry.at("id").get<std::string>();
    s.patient_id = entry.at("patient_id").get<std::string>();
    s.votes = entry.at("votes").get<std::vector<int>>();
    s.channel_names = ds.channel_names;

    std::filesystem::path blob_path = directory / entry.at("file").get<std::string>();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("missing blob for segment " + s.id + ": " + blob_path.string());
    blob.seekg(0, std::ios::end);
    const auto actual = static_cast<uint64_t>(blob.tellg());
    const uint64_t expected = static_cast<uint64_t>(n_channels) * window * sizeof(float);
    if (actual != expected) {
      std::ostringstream msg;
      msg << "segment " << s.id << ": blob byte count " << actual << " does not match declared shape ["
          << n_channels << " x " << window << "] (" << expected << " bytes)";
      throw std::runtime_error(msg.str());
    }
    blob.seekg(0, std::ios::beg);

    s.data.resize(n_channels, window);
    for (Eigen::Index c = 0; c < n_channels; ++c) {
      for (Eigen::Index t = 0; t < window; ++t) {
        float v;
        blob.read(reinterpret_cast<char*>(&v), sizeof(float));
        s.data(c, t) = v;
      }
    }
    if (!blob) throw std::runtime_error("read failure on blob for segment " + s.id);
    ds.segments.push_back(std::move(s));
  }

  auto violations = validate_dataset(ds);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw std::runtime_error("loaded dataset violates invariants" +
                             (v.segment_id.empty() ? std::string() : " (segment " + v.segment_id + ")") +
                             ": " + v.rule);
  }
  return ds;
}

}  // namespace scfnet
