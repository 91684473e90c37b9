#include "eeg2speech/dataio.hpp"

#include "eeg2speech/dsp.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace eeg2speech::dataio {

namespace fs = std::filesystem;
using nlohmann::json;

void AudioClip::validate() const {
  if (sample_rate_hz <= 0) throw DataError("audio: sample rate must be positive");
  if (samples.empty()) throw DataError("audio: clip is empty");
  for (double s : samples) {
    if (!std::isfinite(s) || std::abs(s) > 1.0) throw DataError("audio: sample outside [-1, 1]");
  }
}

void EegRecording::validate() const {
  if (data.rows() != kChannels) throw DataError("eeg: expected 31 channels");
  if (sample_rate_hz <= 0) throw DataError("eeg: sample rate must be positive");
  if (!data.allFinite()) throw DataError("eeg: non-finite sample");
}

std::string to_string(Condition c) { return c == Condition::Spoken ? "spoken" : "listen"; }

Condition parse_condition(const std::string& s) {
  if (s == "spoken") return Condition::Spoken;
  if (s == "listen") return Condition::Listen;
  throw ConfigError("condition must be 'spoken' or 'listen', got '" + s + "'");
}

std::vector<std::string> DatasetManifest::ids() const {
  std::vector<std::string> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.id);
  return out;
}

const TrialRecord& DatasetManifest::find(const std::string& id) const {
  for (const auto& t : trials) {
    if (t.id == id) return t;
  }
  throw DataError("manifest: unknown trial id '" + id + "'");
}

DatasetManifest DatasetManifest::filtered(std::optional<int> subject,
                                          std::optional<Condition> condition) const {
  DatasetManifest out;
  out.root = root;
  for (const auto& t : trials) {
    if (subject && t.subject != *subject) continue;
    if (condition && t.condition != *condition) continue;
    out.trials.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------- WAV

namespace {

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>((v >> 8) & 0xff));
}
std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

std::int16_t quantize_sample(double x) {
  const double q = std::round(x * 32767.0);
  return static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
}

void write_wav(const fs::path& path, const AudioClip& clip) {
  clip.validate();
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  std::string b;
  b.reserve(44 + 2 * n);
  b += "RIFF";
  put_u32(b, 36 + 2 * n);
  b += "WAVEfmt ";
  put_u32(b, 16);
  put_u16(b, 1);  // PCM
  put_u16(b, 1);  // mono
  put_u32(b, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put_u32(b, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put_u16(b, 2);
  put_u16(b, 16);
  b += "data";
  put_u32(b, 2 * n);
  for (double s : clip.samples) put_u16(b, static_cast<std::uint16_t>(quantize_sample(s)));
  write_file(path, b);
}

AudioClip read_wav(const fs::path& path) {
  const std::string raw = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  const std::size_t size = raw.size();
  if (size < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw DataError("wav: malformed header in " + path.string());
  }
  AudioClip clip;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const std::uint32_t len = get_u32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    if (pos + 8 + len > size) throw DataError("wav: truncated chunk in " + path.string());
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (len < 16) throw DataError("wav: malformed fmt chunk");
      const auto format = get_u16(body);
      const auto channels = get_u16(body + 2);
      const auto bits = get_u16(body + 14);
      if (format != 1 || bits != 16) throw DataError("wav: unsupported bit depth (need 16-bit PCM)");
      if (channels != 1) throw DataError("wav: unsupported channel count (need mono)");
      clip.sample_rate_hz = static_cast<int>(get_u32(body + 4));
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw DataError("wav: data chunk before fmt chunk");
      clip.samples.resize(len / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto word = static_cast<std::int16_t>(get_u16(body + 2 * i));
        clip.samples[i] = static_cast<double>(word) / 32768.0;
      }
      return clip;
    }
    pos += 8 + len + (len & 1);
  }
  throw DataError("wav: missing data chunk in " + path.string());
}

// ---------------------------------------------------------------- EEG

namespace {

constexpr char kEegMagic[8] = {'E', 'E', 'G', 'F', '3', '2', '\0', '\0'};

std::string channel_name(int c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "ch%02d", c + 1);
  return buf;
}

}  // namespace

void write_eeg_csv(const fs::path& path, const EegRecording& rec) {
  rec.validate();
  std::string out;
  for (int c = 0; c < EegRecording::kChannels; ++c) {
    if (c) out += ',';
    out += channel_name(c);
  }
  out += '\n';
  char buf[32];
  for (Eigen::Index t = 0; t < rec.samples(); ++t) {
    for (int c = 0; c < EegRecording::kChannels; ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.9g", rec.data(c, t));
      out += buf;
    }
    out += '\n';
  }
  write_file(path, out);
}

EegRecording read_eeg_csv(const fs::path& path) {
  const std::string text = read_file(path);
  if (text.empty()) throw DataError("eeg csv: empty file " + path.string());
  std::vector<double> values;
  std::size_t pos = text.find('\n');
  const std::string header = text.substr(0, pos);
  if (std::count(header.begin(), header.end(), ',') + 1 != EegRecording::kChannels) {
    throw DataError("eeg csv: wrong column count in header of " + path.string());
  }
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (pos != std::string::npos && pos + 1 < text.size()) {
    const std::size_t start = pos + 1;
    pos = text.find('\n', start);
    const std::size_t end = pos == std::string::npos ? text.size() : pos;
    ++line_no;
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    int cols = 0;
    std::size_t cell_start = 0;
    while (true) {
      const std::size_t comma = line.find(',', cell_start);
      std::string_view cell = line.substr(cell_start, comma == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : comma - cell_start);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw DataError("eeg csv: non-numeric cell at line " + std::to_string(line_no));
      }
      values.push_back(v);
      ++cols;
      if (comma == std::string_view::npos) break;
      cell_start = comma + 1;
    }
    if (cols != EegRecording::kChannels) {
      throw DataError("eeg csv: wrong column count at line " + std::to_string(line_no));
    }
    ++rows;
  }
  if (rows == 0) throw DataError("eeg csv: no samples in " + path.string());
  EegRecording rec;
  rec.data = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(rows),
                                   EegRecording::kChannels)
                 .transpose();
  rec.validate();
  return rec;
}

void write_eeg_binary(const fs::path& path, const EegRecording& rec) {
  rec.validate();
  std::string b(kEegMagic, sizeof kEegMagic);
  put_u32(b, 1);  // version
  put_u32(b, EegRecording::kChannels);
  put_u32(b, static_cast<std::uint32_t>(rec.sample_rate_hz));
  const auto n = static_cast<std::uint64_t>(rec.samples());
  put_u32(b, static_cast<std::uint32_t>(n & 0xffffffffu));
  put_u32(b, static_cast<std::uint32_t>(n >> 32));
  for (Eigen::Index t = 0; t < rec.samples(); ++t) {
    for (int c = 0; c < EegRecording::kChannels; ++c) {
      const float v = static_cast<float>(rec.data(c, t));
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(b, bits);
    }
  }
  write_file(path, b);
}

EegRecording read_eeg_binary(const fs::path& path) {
  const std::string raw = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 28 || std::memcmp(p, kEegMagic, 8) != 0) {
    throw DataError("eeg binary: malformed header in " + path.string());
  }
  if (get_u32(p + 8) != 1) throw DataError("eeg binary: unsupported version");
  if (get_u32(p + 12) != EegRecording::kChannels) throw DataError("eeg binary: wrong column count");
  EegRecording rec;
  rec.sample_rate_hz = static_cast<int>(get_u32(p + 16));
  const std::uint64_t n = get_u32(p + 20) | (static_cast<std::uint64_t>(get_u32(p + 24)) << 32);
  if (n == 0) throw DataError("eeg binary: empty recording");
  if (raw.size() != 28 + n * EegRecording::kChannels * 4) throw DataError("eeg binary: truncated data");
  rec.data.resize(EegRecording::kChannels, static_cast<Eigen::Index>(n));
  const unsigned char* q = p + 28;
  for (std::uint64_t t = 0; t < n; ++t) {
    for (int c = 0; c < EegRecording::kChannels; ++c, q += 4) {
      const std::uint32_t bits = get_u32(q);
      float v;
      std::memcpy(&v, &bits, 4);
      rec.data(c, static_cast<Eigen::Index>(t)) = v;
    }
  }
  rec.validate();
  return rec;
}

EegRecording read_eeg(const fs::path& path) {
  return path.extension() == ".f32" ? read_eeg_binary(path) : read_eeg_csv(path);
}

void write_eeg(const fs::path& path, const EegRecording& rec) {
  if (path.extension() == ".f32") {
    write_eeg_binary(path, rec);
  } else {
    write_eeg_csv(path, rec);
  }
}

// ---------------------------------------------------------------- manifest

DatasetManifest load_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError("manifest: " + std::string(e.what()));
  }
  if (!j.is_array()) throw DataError("manifest: expected a JSON array");
  DatasetManifest m;
  m.root = path.parent_path();
  std::set<std::string> seen;
  for (const auto& item : j) {
    TrialRecord t;
    try {
      t.id = item.at("id").get<std::string>();
      t.subject = item.at("subject").get<int>();
      t.condition = parse_condition(item.at("condition").get<std::string>());
      t.eeg_path = item.at("eeg_path").get<std::string>();
      t.wav_path = item.at("wav_path").get<std::string>();
      if (item.contains("transcript")) t.transcript = item.at("transcript").get<std::string>();
    } catch (const json::exception& e) {
      throw DataError("manifest: bad entry: " + std::string(e.what()));
    } catch (const ConfigError& e) {
      throw DataError(std::string("manifest: ") + e.what());
    }
    if (!seen.insert(t.id).second) throw DataError("manifest: duplicate id '" + t.id + "'");
    for (const auto& rel : {t.eeg_path, t.wav_path}) {
      if (!fs::exists(m.root / rel)) throw DataError("manifest: missing file " + (m.root / rel).string());
    }
    m.trials.push_back(std::move(t));
  }
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json j = json::array();
  for (const auto& t : manifest.trials) {
    json item = {{"id", t.id},
                 {"subject", t.subject},
                 {"condition", to_string(t.condition)},
                 {"eeg_path", t.eeg_path},
                 {"wav_path", t.wav_path}};
    if (t.transcript) item["transcript"] = *t.transcript;
    j.push_back(std::move(item));
  }
  write_file(path, j.dump(2) + "\n");
}

LoadedTrial load_trial(const DatasetManifest& manifest, const TrialRecord& record) {
  LoadedTrial t{record, read_eeg(manifest.root / record.eeg_path),
                read_wav(manifest.root / record.wav_path)};
  if (std::abs(t.eeg.duration_s() - t.audio.duration_s()) > 0.1) {
    throw DataError("trial " + record.id + ": EEG and audio durations differ by more than 100 ms");
  }
  return t;
}

// ---------------------------------------------------------------- split

void save_matrix_csv(const fs::path& path, const RowMatrix& m, const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      out += buf;
    }
    out += '\n';
  }
  write_file(path, out);
}

RowMatrix load_matrix_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<double> values;
  Eigen::Index rows = 0, cols = -1;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    Eigen::Index n = 0;
    std::size_t cell_start = 0;
    while (true) {
      const std::size_t comma = line.find(',', cell_start);
      std::string_view cell = line.substr(cell_start, comma == std::string_view::npos ? std::string_view::npos
                                                                                       : comma - cell_start);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw DataError("matrix csv: non-numeric cell at line " + std::to_string(line_no) + " of " + path.string());
      }
      values.push_back(v);
      ++n;
      if (comma == std::string_view::npos) break;
      cell_start = comma + 1;
    }
    if (cols >= 0 && n != cols) {
      throw DataError("matrix csv: wrong column count at line " + std::to_string(line_no) + " of " + path.string());
    }
    cols = n;
    ++rows;
  }
  if (rows == 0) return RowMatrix(0, 0);
  return Eigen::Map<RowMatrix>(values.data(), rows, cols);
}

SplitAssignment make_split(const std::vector<std::string>& ids, const SplitRatios& ratios,
                           std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0) ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split: degenerate ratios (need positive ratios summing to 1)");
  }
  std::vector<std::string> sorted(ids);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DataError("split: duplicate trial ids");
  }
  if (sorted.size() < 10) throw DataError("split: need at least 10 trials");
  std::mt19937_64 rng(seed);
  std::shuffle(sorted.begin(), sorted.end(), rng);

  const double n = static_cast<double>(sorted.size());
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
  const std::size_t n_train = sorted.size() - n_val - n_test;

  SplitAssignment s;
  s.seed = seed;
  s.train_ids.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val_ids.assign(sorted.begin() + static_cast<std::ptrdiff_t>(n_train),
                   sorted.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test_ids.assign(sorted.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), sorted.end());
  return s;
}

void save_split(const fs::path& path, const SplitAssignment& split) {
  const json j = {{"seed", split.seed},
                  {"train", split.train_ids},
                  {"val", split.val_ids},
                  {"test", split.test_ids}};
  write_file(path, j.dump(2) + "\n");
}

SplitAssignment load_split(const fs::path& path) {
  try {
    const json j = json::parse(read_file(path));
    SplitAssignment s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_ids = j.at("train").get<std::vector<std::string>>();
    s.val_ids = j.at("val").get<std::vector<std::string>>();
    s.test_ids = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const json::exception& e) {
    throw DataError("split file: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------- synthetic data

namespace {

// Paul Kellet's economy pink filter on unit white noise, rescaled to unit std.
Signal pink_noise(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Signal out(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  // Warm up so the slow pole starts near its stationary state.
  for (int i = 0; i < 2000; ++i) {
    const double w = gauss(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
  }
  for (auto& v : out) {
    const double w = gauss(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    v = b0 + b1 + b2 + w * 0.1848;
  }
  double mean = 0.0, sq = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  for (double v : out) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(n));
  for (auto& v : out) v = (v - mean) / (sd > 0.0 ? sd : 1.0);
  return out;
}

}  // namespace

SyntheticTrial make_synthetic_trial(std::uint64_t seed, int index, double duration_s,
                                    const SyntheticOptions& options) {
  if (!(duration_s >= 0.5 && duration_s <= 10.0)) {
    throw ConfigError("synthetic: duration_s must be in [0.5, 10]");
  }
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  constexpr int kEegRate = 1000;
  const auto n_eeg = static_cast<std::size_t>(std::lround(duration_s * kEegRate));

  // Smooth latent: a few slow sinusoids, half-wave rectified so the utterance has
  // silent gaps, scaled to peak 1.
  SyntheticTrial trial;
  trial.latent.assign(n_eeg, 0.0);
  double offset = 0.15;
  struct Partial {
    double amp, freq, phase;
  };
  std::vector<Partial> partials;
  for (int i = 0; i < 4; ++i) {
    partials.push_back({(0.4 + 0.6 * unif(rng)) / (1.0 + 0.5 * i), 0.5 + 3.5 * unif(rng),
                        2.0 * kPi * unif(rng)});
  }
  double peak = 0.0;
  for (int attempt = 0; attempt < 8 && peak <= 0.0; ++attempt, offset += 0.25) {
    for (std::size_t t = 0; t < n_eeg; ++t) {
      const double time = static_cast<double>(t) / kEegRate;
      double s = offset;
      for (const auto& p : partials) s += p.amp * std::sin(2.0 * kPi * p.freq * time + p.phase);
      trial.latent[t] = std::max(0.0, s);
      peak = std::max(peak, trial.latent[t]);
    }
  }
  for (auto& v : trial.latent) v /= peak;

  trial.eeg.sample_rate_hz = kEegRate;
  trial.eeg.data.resize(EegRecording::kChannels, static_cast<Eigen::Index>(n_eeg));
  for (int c = 0; c < EegRecording::kChannels; ++c) {
    const double gain = 0.5 + unif(rng);
    const Signal pink = pink_noise(rng, n_eeg);
    for (std::size_t t = 0; t < n_eeg; ++t) {
      trial.eeg.data(c, static_cast<Eigen::Index>(t)) =
          options.latent_uv * gain * trial.latent[t] + options.noise_uv * pink[t];
    }
  }

  // Audio: harmonic carrier with a baseband offset, amplitude-modulated by e(t).
  std::vector<double> amps, phases;
  double norm = options.carrier_offset;
  for (int k = 0; k < options.harmonics; ++k) {
    amps.push_back(0.6 * std::pow(0.7, k));
    phases.push_back(2.0 * kPi * unif(rng));
    norm += amps.back();
  }
  const int rate = options.audio_rate_hz;
  const auto n_audio = static_cast<std::size_t>(std::lround(duration_s * rate));
  trial.audio.sample_rate_hz = rate;
  trial.audio.samples.resize(n_audio);
  for (std::size_t i = 0; i < n_audio; ++i) {
    const double time = static_cast<double>(i) / rate;
    const double pos = time * kEegRate;
    const auto lo = std::min(static_cast<std::size_t>(pos), n_eeg - 1);
    const auto hi = std::min(lo + 1, n_eeg - 1);
    const double frac = pos - static_cast<double>(lo);
    const double env = (1.0 - frac) * trial.latent[lo] + frac * trial.latent[hi];
    double carrier = options.carrier_offset;
    for (int k = 0; k < options.harmonics; ++k) {
      carrier += amps[static_cast<std::size_t>(k)] *
                 std::sin(2.0 * kPi * options.fundamental_hz * (k + 1) * time +
                          phases[static_cast<std::size_t>(k)]);
    }
    trial.audio.samples[i] = std::clamp(env * carrier / norm, -1.0, 1.0);
  }
  return trial;
}

DatasetManifest generate_synthetic_dataset(int n_trials, double duration_s, std::uint64_t seed,
                                           const fs::path& out_dir,
                                           const SyntheticOptions& options) {
  if (n_trials < 1) throw ConfigError("synthetic: n_trials must be >= 1");
  if (options.n_subjects < 1 || options.n_subjects > 4) {
    throw ConfigError("synthetic: n_subjects must be in [1, 4]");
  }
  if (options.conditions.empty()) throw ConfigError("synthetic: no conditions given");
  std::error_code ec;
  fs::create_directories(out_dir / "eeg", ec);
  fs::create_directories(out_dir / "audio", ec);
  if (ec) throw DataError("synthetic: cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest m;
  m.root = out_dir;
  const int groups = options.n_subjects * static_cast<int>(options.conditions.size());
  for (int i = 0; i < n_trials; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "trial_%04d", i + 1);
    const int g = i % groups;
    TrialRecord rec;
    rec.id = id;
    rec.subject = 1 + g % options.n_subjects;
    rec.condition = options.conditions[static_cast<std::size_t>(g / options.n_subjects)];
    rec.eeg_path = "eeg/" + rec.id + ".csv";
    rec.wav_path = "audio/" + rec.id + ".wav";
    const SyntheticTrial trial = make_synthetic_trial(seed, i, duration_s, options);
    write_eeg_csv(out_dir / rec.eeg_path, trial.eeg);
    write_wav(out_dir / rec.wav_path, trial.audio);
    m.trials.push_back(std::move(rec));
  }
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace eeg2speech::dataio
