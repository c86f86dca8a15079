#include "herbage/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <zlib.h>

#include "cv_bridge.hpp"
#include "herbage/synthgen.hpp"

namespace herbage {

namespace fs = std::filesystem;

// --- files -------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void write_text_file(const fs::path& path, std::string_view text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

// --- images ------------------------------------------------------------------

namespace {

cv::Mat decode_8bit(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::Io, "missing file " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw Error(ErrorCode::Decode, "cannot decode image " + path.string());
  if (m.depth() == CV_16U) {
    m.convertTo(m, CV_8U, 1.0 / 257.0);
  } else if (m.depth() != CV_8U) {
    throw Error(ErrorCode::Decode, "unsupported pixel depth in " + path.string());
  }
  return m;
}

cv::Mat to_rgb(const cv::Mat& m) {
  cv::Mat out;
  switch (m.channels()) {
    case 1: cv::cvtColor(m, out, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(m, out, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(m, out, cv::COLOR_BGRA2RGB); break;
    default: throw Error(ErrorCode::Decode, "unsupported channel count");
  }
  return out;
}

void encode_to(const fs::path& path, const cv::Mat& m, const std::vector<int>& params) {
  std::vector<std::uint8_t> buf;
  const std::string ext = path.extension().string();
  if (!cv::imencode(ext, m, buf, params)) throw Error(ErrorCode::Io, "cannot encode " + path.string());
  write_file_bytes(path, buf);
}

}  // namespace

RgbImage read_rgb(const fs::path& path) { return detail::to_raster(to_rgb(decode_8bit(path))); }

Mask read_gray(const fs::path& path) {
  cv::Mat m = decode_8bit(path);
  if (m.channels() == 1) return detail::to_raster(m);
  cv::Mat g;
  if (m.channels() == 4) {
    cv::extractChannel(m, g, 3);  // a 4-channel mask file carries the mask in alpha
  } else {
    cv::cvtColor(m, g, cv::COLOR_BGR2GRAY);
  }
  return detail::to_raster(g);
}

DecodedImage read_image_with_alpha(const fs::path& path) {
  cv::Mat m = decode_8bit(path);
  DecodedImage out;
  out.rgb = detail::to_raster(to_rgb(m));
  if (m.channels() == 4) {
    cv::Mat a;
    cv::extractChannel(m, a, 3);
    out.alpha = detail::to_raster(a);
  }
  return out;
}

void write_jpeg(const fs::path& path, const RgbImage& rgb, int quality) {
  if (rgb.channels != 3) throw Error(ErrorCode::InvalidArgument, "write_jpeg: expected 3 channels");
  cv::Mat bgr;
  cv::cvtColor(detail::view(rgb), bgr, cv::COLOR_RGB2BGR);
  encode_to(path, bgr, {cv::IMWRITE_JPEG_QUALITY, quality});
}

void write_png(const fs::path& path, const Raster<std::uint8_t>& image) {
  cv::Mat m;
  switch (image.channels) {
    case 1: m = detail::view(image); break;
    case 3: cv::cvtColor(detail::view(image), m, cv::COLOR_RGB2BGR); break;
    case 4: cv::cvtColor(detail::view(image), m, cv::COLOR_RGBA2BGRA); break;
    default: throw Error(ErrorCode::InvalidArgument, "write_png: unsupported channel count");
  }
  encode_to(path, m, {cv::IMWRITE_PNG_COMPRESSION, 6});
}

LabelMap read_label_png(const fs::path& path) {
  cv::Mat m = decode_8bit(path);
  if (m.channels() != 1) throw Error(ErrorCode::Decode, "label map must be single channel: " + path.string());
  return detail::to_raster(m);
}

// --- binary containers -------------------------------------------------------

namespace {

constexpr std::size_t kHeaderSize = 12;
// zlib's worst-case expansion ratio is about 1032:1.
constexpr std::uint64_t kMaxInflateRatio = 1032;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> floats_le(std::span<const float> values) {
  std::vector<std::uint8_t> raw;
  raw.reserve(values.size() * 4);
  for (float f : values) put_u32(raw, std::bit_cast<std::uint32_t>(f));
  return raw;
}

void append_compressed(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> raw) {
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> buf(len);
  if (compress2(buf.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw Error(ErrorCode::Io, "zlib compression failed");
  }
  out.insert(out.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(len));
}

std::vector<float> inflate_floats(std::span<const std::uint8_t> compressed, std::uint64_t count,
                                  const char* what) {
  // Checked before multiplying so absurd header dimensions cannot wrap.
  if (count > (compressed.size() * kMaxInflateRatio + 64) / 4) {
    throw Error(ErrorCode::Truncated, std::string(what) + ": payload too short for declared dimensions");
  }
  const std::uint64_t expected = count * 4;
  std::vector<std::uint8_t> raw(expected);
  uLongf dest_len = static_cast<uLongf>(expected);
  uLong src_len = static_cast<uLong>(compressed.size());
  const int rc = uncompress2(raw.data(), &dest_len, compressed.data(), &src_len);
  // Running out of input (including a cut-off checksum) ends with every
  // input byte consumed and no end of stream.
  if ((rc == Z_BUF_ERROR || rc == Z_DATA_ERROR) && src_len == compressed.size()) {
    throw Error(ErrorCode::Truncated, std::string(what) + ": compressed payload truncated");
  }
  if (rc != Z_OK) throw Error(ErrorCode::CorruptPayload, std::string(what) + ": zlib stream invalid");
  if (dest_len != expected) {
    throw Error(ErrorCode::CorruptPayload, std::string(what) + ": decompressed length mismatch");
  }
  if (src_len != compressed.size()) {
    throw Error(ErrorCode::CorruptPayload, std::string(what) + ": trailing bytes after payload");
  }
  std::vector<float> values(count);
  for (std::uint64_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(get_u32(raw, i * 4));
  return values;
}

void check_magic(std::span<const std::uint8_t> bytes, const char* magic, std::size_t header) {
  if (bytes.size() < 4) throw Error(ErrorCode::Truncated, std::string(magic) + ": file too short");
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, std::string("expected magic ") + magic);
  }
  if (bytes.size() < header) throw Error(ErrorCode::Truncated, std::string(magic) + ": truncated header");
}

}  // namespace

std::vector<std::uint8_t> encode_hht(const HeightMap& h) {
  if (h.empty() || h.channels != 1) throw Error(ErrorCode::EmptyRaster, "HHT1: raster must be non-empty, 1 channel");
  for (float v : h.data) {
    if (!std::isfinite(v) || v < 0.0f) throw Error(ErrorCode::InvalidArgument, "HHT1: values must be finite, >= 0");
  }
  std::vector<std::uint8_t> out = {'H', 'H', 'T', '1'};
  put_u32(out, static_cast<std::uint32_t>(h.width));
  put_u32(out, static_cast<std::uint32_t>(h.height));
  append_compressed(out, floats_le(h.data));
  return out;
}

HeightMap decode_hht(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, "HHT1", kHeaderSize);
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  if (w == 0 || h == 0 || w > 0x7fffffffu || h > 0x7fffffffu) {
    throw Error(ErrorCode::CorruptPayload, "HHT1: invalid dimensions");
  }
  auto values = inflate_floats(bytes.subspan(kHeaderSize), static_cast<std::uint64_t>(w) * h, "HHT1");
  for (float v : values) {
    if (!std::isfinite(v) || v < 0.0f) throw Error(ErrorCode::CorruptPayload, "HHT1: negative or non-finite value");
  }
  HeightMap out;
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = 1;
  out.data = std::move(values);
  return out;
}

void write_height_raster(const fs::path& path, const HeightMap& h) { write_file_bytes(path, encode_hht(h)); }

HeightMap read_height_raster(const fs::path& path) {
  try {
    return decode_hht(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_smp(const ScoreMap& s) {
  if (s.width() <= 0 || s.height() <= 0 || s.classes() <= 0 || s.classes() > 255) {
    throw Error(ErrorCode::EmptyRaster, "SMP1: invalid dimensions");
  }
  std::vector<std::uint8_t> out = {'S', 'M', 'P', '1'};
  put_u32(out, static_cast<std::uint32_t>(s.width()));
  put_u32(out, static_cast<std::uint32_t>(s.height()));
  out.push_back(static_cast<std::uint8_t>(s.classes()));
  std::vector<float> narrowed(s.raw().begin(), s.raw().end());
  append_compressed(out, floats_le(narrowed));
  return out;
}

ScoreMap decode_smp(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t header = kHeaderSize + 1;
  check_magic(bytes, "SMP1", header);
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const int classes = bytes[12];
  if (w == 0 || h == 0 || classes == 0 || w > 0x7fffffffu || h > 0x7fffffffu) {
    throw Error(ErrorCode::CorruptPayload, "SMP1: invalid dimensions");
  }
  const std::uint64_t pixels = static_cast<std::uint64_t>(w) * h;
  if (pixels > std::numeric_limits<std::uint64_t>::max() / 4 / static_cast<std::uint64_t>(classes)) {
    throw Error(ErrorCode::CorruptPayload, "SMP1: invalid dimensions");
  }
  auto values = inflate_floats(bytes.subspan(header), pixels * static_cast<std::uint64_t>(classes), "SMP1");

  ScoreMap s(static_cast<int>(w), static_cast<int>(h), classes);
  std::copy(values.begin(), values.end(), s.raw().begin());
  for (std::size_t p = 0; p < pixels; ++p) {
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) {
      const double v = s.at(c, p);
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorCode::CorruptPayload, "SMP1: negative or non-finite score at pixel " + std::to_string(p));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kScoreSumTolerance) {
      throw Error(ErrorCode::CorruptPayload, "SMP1: scores at pixel " + std::to_string(p) + " sum to " +
                                                 std::to_string(sum));
    }
    if (std::abs(sum - 1.0) > kScoreRenormalizeTolerance) {
      for (int c = 0; c < classes; ++c) s.at(c, p) /= sum;
    }
  }
  return s;
}

void write_score_map(const fs::path& path, const ScoreMap& s) { write_file_bytes(path, encode_smp(s)); }

ScoreMap read_score_map(const fs::path& path) {
  try {
    return decode_smp(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// --- scenes ------------------------------------------------------------------

ScenePaths scene_paths(const fs::path& dir, const std::string& image_id) {
  return {dir / (image_id + ".jpg"), dir / (image_id + "_labels.png"), dir / (image_id + "_height.hht")};
}

void write_scene(const SyntheticScene& scene, const HeightMap& normalized_height, const fs::path& dir,
                 const std::string& image_id) {
  if (!normalized_height.same_shape(scene.labels)) {
    throw Error(ErrorCode::ShapeMismatch, "write_scene: height raster does not match scene");
  }
  const auto paths = scene_paths(dir, image_id);
  write_jpeg(paths.rgb, scene.rgb, 95);
  write_png(paths.labels, scene.labels);
  write_height_raster(paths.height, normalized_height);
}

// --- CSV ---------------------------------------------------------------------

std::string format_number(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(std::string_view s, const std::string& context) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    throw Error(ErrorCode::MalformedRow, context + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

struct CsvDocument {
  Provenance provenance;
  std::vector<std::string_view> header;
  std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;  // (line number, cells)
};

CsvDocument parse_csv(std::string_view text) {
  CsvDocument doc;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
      const auto eq = line.find('=');
      if (eq != std::string_view::npos) {
        doc.provenance[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
      }
      continue;
    }
    if (!have_header) {
      doc.header = split(line, ',');
      have_header = true;
    } else {
      doc.rows.emplace_back(line_no, split(line, ','));
    }
  }
  if (!have_header) throw Error(ErrorCode::MalformedRow, "CSV: missing header");
  return doc;
}

void write_provenance(std::ostringstream& out, const Provenance& p) {
  for (const auto& [k, v] : p) out << "# " << k << '=' << v << '\n';
}

void check_id(std::string_view id, std::size_t line) {
  if (id.empty()) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + ": empty image_id");
}

}  // namespace

std::string format_label_table(const LabelTable& t) {
  std::ostringstream out;
  write_provenance(out, t.provenance);
  out << "image_id,total_mass";
  for (const auto& s : t.species) out << ',' << s << "_pct";
  out << ",source\n";
  for (const auto& r : t.rows) {
    validate_row(r, t.species.size());
    if (r.image_id.find_first_of(",\n") != std::string::npos) {
      throw Error(ErrorCode::MalformedRow, "image_id '" + r.image_id + "' contains a separator");
    }
    out << r.image_id << ',' << format_number(r.total_mass);
    for (double p : r.species_pct) out << ',' << format_number(p);
    out << ',' << to_string(r.source) << '\n';
  }
  return out.str();
}

LabelTable parse_label_table(std::string_view text) {
  const auto doc = parse_csv(text);
  const auto& h = doc.header;
  if (h.size() < 3 || h.front() != "image_id" || h[1] != "total_mass" || h.back() != "source") {
    throw Error(ErrorCode::MalformedRow, "label table: header must be image_id,total_mass,<species>_pct...,source");
  }
  LabelTable t;
  t.provenance = doc.provenance;
  for (std::size_t i = 2; i + 1 < h.size(); ++i) {
    std::string_view col = h[i];
    if (col.size() <= 4 || col.substr(col.size() - 4) != "_pct") {
      throw Error(ErrorCode::MalformedRow, "label table: column '" + std::string(col) + "' is not <species>_pct");
    }
    t.species.emplace_back(col.substr(0, col.size() - 4));
  }
  std::set<std::string> ids;
  for (const auto& [line, cells] : doc.rows) {
    const std::string ctx = "line " + std::to_string(line);
    if (cells.size() != h.size()) {
      throw Error(ErrorCode::MalformedRow, ctx + ": expected " + std::to_string(h.size()) + " fields");
    }
    check_id(cells[0], line);
    LabelRow r;
    r.image_id = std::string(cells[0]);
    const std::string rctx = ctx + " ('" + r.image_id + "')";
    r.total_mass = parse_double(cells[1], rctx);
    for (std::size_t i = 2; i + 1 < cells.size(); ++i) r.species_pct.push_back(parse_double(cells[i], rctx));
    r.source = parse_label_source(cells.back());
    validate_row(r, t.species.size());
    if (!ids.insert(r.image_id).second) throw Error(ErrorCode::MalformedRow, rctx + ": duplicate image_id");
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_label_table(const fs::path& path, const LabelTable& t) { write_text_file(path, format_label_table(t)); }

LabelTable read_label_table(const fs::path& path) {
  try {
    return parse_label_table(read_text_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_feature_table(const FeatureTable& t) {
  std::ostringstream out;
  write_provenance(out, t.provenance);
  out << "image_id,mode";
  const auto cols = t.column_names();
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  for (const auto& r : t.rows) {
    if (r.values.size() != cols.size()) {
      throw Error(ErrorCode::MalformedRow, "feature row '" + r.image_id + "' has wrong length");
    }
    out << r.image_id << ',' << to_string(t.mode);
    for (double v : r.values) out << ',' << format_number(v);
    out << '\n';
  }
  return out.str();
}

FeatureTable parse_feature_table(std::string_view text) {
  const auto doc = parse_csv(text);
  const auto& h = doc.header;
  if (h.size() < 3 || h[0] != "image_id" || h[1] != "mode") {
    throw Error(ErrorCode::MalformedRow, "feature table: header must be image_id,mode,<features...>");
  }
  std::vector<std::string> hl, sl;
  bool height = false;
  for (std::size_t i = 2; i < h.size(); ++i) {
    std::string_view c = h[i];
    if (c.starts_with("hl_")) hl.emplace_back(c.substr(3));
    else if (c.starts_with("sl_")) sl.emplace_back(c.substr(3));
    else if (c == "height") height = true;
    else throw Error(ErrorCode::MalformedRow, "feature table: unknown column '" + std::string(c) + "'");
  }
  FeatureTable t;
  t.provenance = doc.provenance;
  if (!hl.empty() && !sl.empty() && height) t.mode = FeatureMode::HL_SL_H;
  else if (!hl.empty() && !sl.empty()) t.mode = FeatureMode::HL_SL;
  else if (!hl.empty() && !height) t.mode = FeatureMode::HL;
  else if (!sl.empty() && !height) t.mode = FeatureMode::SL;
  else throw Error(ErrorCode::MalformedRow, "feature table: unsupported column combination");
  t.classes = hl.empty() ? sl : hl;
  if (t.classes.size() < 2) throw Error(ErrorCode::MalformedRow, "feature table: need at least two classes");
  if (t.column_names() != std::vector<std::string>(h.begin() + 2, h.end())) {
    throw Error(ErrorCode::MalformedRow, "feature table: columns out of canonical order");
  }
  std::set<std::string> ids;
  for (const auto& [line, cells] : doc.rows) {
    const std::string ctx = "line " + std::to_string(line);
    if (cells.size() != h.size()) {
      throw Error(ErrorCode::MalformedRow, ctx + ": expected " + std::to_string(h.size()) + " fields");
    }
    check_id(cells[0], line);
    if (parse_feature_mode(cells[1]) != t.mode) throw Error(ErrorCode::MalformedRow, ctx + ": mode mismatch");
    FeatureRow r;
    r.image_id = std::string(cells[0]);
    for (std::size_t i = 2; i < cells.size(); ++i) r.values.push_back(parse_double(cells[i], ctx));
    if (!ids.insert(r.image_id).second) throw Error(ErrorCode::MalformedRow, ctx + ": duplicate image_id");
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_feature_table(const fs::path& path, const FeatureTable& t) {
  write_text_file(path, format_feature_table(t));
}

FeatureTable read_feature_table(const fs::path& path) {
  try {
    return parse_feature_table(read_text_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace herbage
