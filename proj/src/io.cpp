#include <evreflex/io.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace evreflex::io {
namespace {

constexpr char kEventMagic[4] = {'E', 'V', 'R', 'X'};
constexpr char kMapMagic[4] = {'E', 'V', 'R', 'F'};

class Writer {
public:
  explicit Writer(std::string& out) : out_(out) {}

  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

private:
  std::string& out_;
};

class Reader {
public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }
  std::string_view bytes(std::size_t n) {
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename U>
  U uint() {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

void require_magic(std::string_view bytes, const char (&magic)[4], const char* what) {
  if (bytes.size() < 4) {
    throw Error(ErrorKind::Truncated, std::string(what) + ": file shorter than its magic");
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw Error(ErrorKind::BadMagic, std::string(what) + ": bad magic");
  }
}

void require_version(std::uint32_t version, const char* what) {
  if (version != kFormatVersion) {
    throw Error(ErrorKind::VersionMismatch, std::string(what) + ": unsupported version " +
                                                std::to_string(version));
  }
}

void require_dimension(std::uint32_t v, const char* what) {
  if (v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw Error(ErrorKind::SizeMismatch, std::string(what) + ": dimension too large");
  }
}

// Payload size implied by a header, rejecting overflow.
std::uint64_t payload_bytes(std::uint64_t count, std::uint64_t stride, const char* what) {
  if (count > std::numeric_limits<std::uint64_t>::max() / stride) {
    throw Error(ErrorKind::SizeMismatch, std::string(what) + ": declared size overflows");
  }
  return count * stride;
}

void require_exact_size(std::uint64_t have, std::uint64_t want, const char* what) {
  if (have < want) {
    throw Error(ErrorKind::Truncated, std::string(what) + ": payload truncated (" +
                                          std::to_string(have) + " of " + std::to_string(want) +
                                          " bytes)");
  }
  if (have > want) {
    throw Error(ErrorKind::SizeMismatch, std::string(what) + ": " + std::to_string(have - want) +
                                             " bytes beyond the declared payload");
  }
}

// Decodes one map record from the front of `bytes`; `consumed` receives its
// length. Trailing bytes are left to the caller.
FloatMap decode_map_record(std::string_view bytes, std::size_t& consumed) {
  require_magic(bytes, kMapMagic, "map");
  if (bytes.size() < kMapHeaderBytes) throw Error(ErrorKind::Truncated, "map: header truncated");
  Reader r(bytes);
  r.bytes(4);
  require_version(r.uint<std::uint32_t>(), "map");
  const auto semantics = r.uint<std::uint32_t>();
  const auto width = r.uint<std::uint32_t>();
  const auto height = r.uint<std::uint32_t>();
  if (semantics > static_cast<std::uint32_t>(Semantics::FlowV)) {
    throw Error(ErrorKind::Parse, "map: unknown semantics " + std::to_string(semantics));
  }
  require_dimension(width, "map");
  require_dimension(height, "map");
  const std::uint64_t payload =
      payload_bytes(static_cast<std::uint64_t>(width) * height, 4, "map");
  if (r.remaining() < payload) {
    throw Error(ErrorKind::Truncated, "map: payload truncated (" + std::to_string(r.remaining()) +
                                          " of " + std::to_string(payload) + " bytes)");
  }
  FloatMap map(static_cast<Semantics>(semantics), static_cast<int>(width),
               static_cast<int>(height));
  for (std::size_t i = 0; i < map.values.size(); ++i) map.values[i] = r.f32();
  consumed = r.position();
  return map;
}

} // namespace

std::string encode_events(std::span<const Event> events, int width, int height) {
  if (width < 0 || height < 0) throw Error(ErrorKind::InvalidArgument, "events: negative size");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.x >= width || e.y >= height) {
      throw Error(ErrorKind::CoordinateOutOfRange, "events: event outside the declared raster");
    }
    if (i > 0 && event_before(e, events[i - 1])) {
      throw Error(ErrorKind::Unsorted, "events: stream is not sorted");
    }
  }
  std::string out;
  out.reserve(kEventHeaderBytes + kEventRecordBytes * events.size());
  Writer w(out);
  w.bytes(kEventMagic, 4);
  w.uint<std::uint32_t>(kFormatVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(width));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(height));
  w.uint<std::uint64_t>(events.size());
  for (const Event& e : events) {
    w.f64(e.t);
    w.uint<std::uint16_t>(e.x);
    w.uint<std::uint16_t>(e.y);
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(e.polarity));
    w.bytes("\0\0\0", 3);
  }
  return out;
}

EventFile decode_events(std::string_view bytes) {
  require_magic(bytes, kEventMagic, "events");
  if (bytes.size() < kEventHeaderBytes) {
    throw Error(ErrorKind::Truncated, "events: header truncated");
  }
  Reader r(bytes);
  r.bytes(4);
  require_version(r.uint<std::uint32_t>(), "events");
  const auto width = r.uint<std::uint32_t>();
  const auto height = r.uint<std::uint32_t>();
  const auto count = r.uint<std::uint64_t>();
  require_dimension(width, "events");
  require_dimension(height, "events");
  require_exact_size(r.remaining(), payload_bytes(count, kEventRecordBytes, "events"), "events");

  EventFile file{static_cast<int>(width), static_cast<int>(height), {}};
  file.events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Event e;
    e.t = r.f64();
    e.x = r.uint<std::uint16_t>();
    e.y = r.uint<std::uint16_t>();
    e.polarity = static_cast<std::int8_t>(r.uint<std::uint8_t>());
    const auto pad = r.bytes(3);
    if (e.x >= width || e.y >= height) {
      throw Error(ErrorKind::CoordinateOutOfRange,
                  "events: record " + std::to_string(i) + " lies outside the declared raster");
    }
    if (e.polarity != 1 && e.polarity != -1) {
      throw Error(ErrorKind::Parse, "events: record " + std::to_string(i) + " has bad polarity");
    }
    if (pad != std::string_view("\0\0\0", 3)) {
      throw Error(ErrorKind::Parse, "events: record " + std::to_string(i) + " has non-zero padding");
    }
    if (!std::isfinite(e.t) || e.t < 0.0) {
      throw Error(ErrorKind::Parse, "events: record " + std::to_string(i) + " has a bad timestamp");
    }
    if (!file.events.empty() && event_before(e, file.events.back())) {
      throw Error(ErrorKind::Unsorted, "events: records are not sorted");
    }
    file.events.push_back(e);
  }
  return file;
}

std::string encode_map(const FloatMap& map) {
  std::string out;
  out.reserve(kMapHeaderBytes + 4 * map.values.size());
  Writer w(out);
  w.bytes(kMapMagic, 4);
  w.uint<std::uint32_t>(kFormatVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(map.semantics));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(map.width()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(map.height()));
  for (float v : map.values.values()) w.f32(v);
  return out;
}

FloatMap decode_map(std::string_view bytes) {
  std::size_t used = 0;
  FloatMap map = decode_map_record(bytes, used);
  require_exact_size(bytes.size(), used, "map");
  return map;
}

std::string encode_flow(const FlowField& flow) {
  FloatMap u(Semantics::FlowU, 0, 0);
  u.values = flow.u;
  FloatMap v(Semantics::FlowV, 0, 0);
  v.values = flow.v;
  return encode_map(u) + encode_map(v);
}

FlowField decode_flow(std::string_view bytes) {
  std::size_t used = 0;
  FloatMap u = decode_map_record(bytes, used);
  if (used == bytes.size()) throw Error(ErrorKind::Truncated, "flow: missing v record");
  FloatMap v = decode_map(bytes.substr(used));
  if (u.semantics != Semantics::FlowU || v.semantics != Semantics::FlowV) {
    throw Error(ErrorKind::KindMismatch, "flow: records must be flow_u then flow_v");
  }
  require_same_shape(u, v, "flow");
  FlowField f;
  f.u = std::move(u.values);
  f.v = std::move(v.values);
  return f;
}

std::string read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorKind::MissingStream, "missing file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::Io, "read failed: " + path.string());
  return data;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw Error(ErrorKind::Io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into place: " + path.string());
  }
}

namespace {

template <typename Decode>
auto decode_file(const std::filesystem::path& path, Decode&& decode) {
  const std::string bytes = read_file(path);
  try {
    return decode(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

} // namespace

void write_events(const std::filesystem::path& path, std::span<const Event> events, int width,
                  int height) {
  write_file_atomic(path, encode_events(events, width, height));
}

EventFile read_events(const std::filesystem::path& path) {
  return decode_file(path, [](std::string_view b) { return decode_events(b); });
}

void write_map(const std::filesystem::path& path, const FloatMap& map) {
  write_file_atomic(path, encode_map(map));
}

FloatMap read_map(const std::filesystem::path& path) {
  return decode_file(path, [](std::string_view b) { return decode_map(b); });
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
  write_file_atomic(path, encode_flow(flow));
}

FlowField read_flow(const std::filesystem::path& path) {
  return decode_file(path, [](std::string_view b) { return decode_flow(b); });
}

std::filesystem::path tti_valid_path(const std::filesystem::path& path) {
  return path.parent_path() / (path.stem().string() + ".valid" + path.extension().string());
}

void write_tti(const std::filesystem::path& path, const tti::TtiMap& map) {
  FloatMap valid(Semantics::ClassId, map.width(), map.height());
  for (std::size_t i = 0; i < map.valid.size(); ++i) valid.values[i] = map.valid[i] ? 1.0f : 0.0f;
  write_map(path, map.values);
  write_map(tti_valid_path(path), valid);
}

tti::TtiMap read_tti(const std::filesystem::path& path, double dt) {
  FloatMap values = read_map(path);
  if (values.semantics != Semantics::InvTtiS) {
    throw Error(ErrorKind::KindMismatch, path.string() + ": not an inverse-TTI map");
  }
  const auto valid_path = tti_valid_path(path);
  FloatMap valid = read_map(valid_path);
  if (valid.semantics != Semantics::ClassId) {
    throw Error(ErrorKind::KindMismatch, valid_path.string() + ": not a validity mask");
  }
  require_same_shape(values, valid, "read_tti");
  tti::TtiMap map(values.width(), values.height(), dt);
  map.values = std::move(values);
  for (std::size_t i = 0; i < map.valid.size(); ++i) {
    const float v = valid.values[i];
    if (v != 0.0f && v != 1.0f) {
      throw Error(ErrorKind::Parse, valid_path.string() + ": mask values must be 0 or 1");
    }
    map.valid[i] = v != 0.0f ? 1 : 0;
  }
  return map;
}

} // namespace evreflex::io
