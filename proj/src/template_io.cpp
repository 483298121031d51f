#include "lfid/template_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "lfid/error.hpp"

namespace lfid {

namespace {

constexpr std::uint32_t fourcc(const char (&s)[5]) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24);
}

constexpr std::uint32_t kTagMeta = fourcc("META");
constexpr std::uint32_t kTagMinutiae = fourcc("MINU");
constexpr std::uint32_t kTagField = fourcc("ORIF");
constexpr std::uint32_t kTagDescriptors = fourcc("DESC");

constexpr std::uint8_t kKindMinutiae = 1;
constexpr std::uint8_t kKindTexture = 2;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return get_le<std::uint8_t>(); }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw Error(ErrorCode::TruncatedPayload, "unexpected end of template data");
  }
  template <typename T>
  T get_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void write_section(Writer& out, std::uint32_t tag, Writer& payload) {
  out.u32(tag);
  out.u32(static_cast<std::uint32_t>(payload.bytes().size()));
  out.raw(payload.bytes());
}

void write_header(Writer& w, std::uint8_t kind, std::uint8_t variant) {
  w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("LFRT"), 4));
  w.u16(kTemplateFormatVersion);
  w.u8(kind);
  w.u8(variant);
}

void write_minutiae(Writer& out, const std::vector<Minutia>& ms) {
  Writer p;
  p.u32(static_cast<std::uint32_t>(ms.size()));
  for (const auto& m : ms) {
    p.f64(m.x);
    p.f64(m.y);
    p.f64(m.alpha);
    p.u8(static_cast<std::uint8_t>(m.kind));
  }
  write_section(out, kTagMinutiae, p);
}

void write_descriptors(Writer& out, const DescriptorSet& d) {
  Writer p;
  p.u16(static_cast<std::uint16_t>(d.patch_types.size()));
  for (auto t : d.patch_types) p.u8(static_cast<std::uint8_t>(t));
  p.u32(static_cast<std::uint32_t>(d.dim));
  p.u32(static_cast<std::uint32_t>(d.count()));
  for (float v : d.values) p.f32(v);
  write_section(out, kTagDescriptors, p);
}

std::vector<Minutia> read_minutiae(Reader& r) {
  const auto n = r.u32();
  if (static_cast<std::size_t>(n) * 25 > r.remaining()) {
    throw Error(ErrorCode::TruncatedPayload, "minutiae section shorter than its count");
  }
  std::vector<Minutia> ms(n);
  for (auto& m : ms) {
    m.x = r.f64();
    m.y = r.f64();
    m.alpha = r.f64();
    const auto kind = r.u8();
    if (kind > 1) throw Error(ErrorCode::MalformedPayload, "unknown minutia kind");
    m.kind = static_cast<MinutiaKind>(kind);
  }
  return ms;
}

DescriptorSet read_descriptors(Reader& r) {
  DescriptorSet d;
  const auto np = r.u16();
  for (std::uint16_t i = 0; i < np; ++i) {
    const auto t = r.u8();
    if (t >= kPatchTypeCount) throw Error(ErrorCode::MalformedPayload, "unknown patch type id");
    d.patch_types.push_back(static_cast<PatchType>(t));
  }
  d.dim = r.u32();
  const auto count = r.u32();
  const std::size_t total = static_cast<std::size_t>(count) * np * d.dim;
  if (total * 4 > r.remaining()) throw Error(ErrorCode::TruncatedPayload, "descriptor payload truncated");
  d.values.resize(total);
  for (auto& v : d.values) v = r.f32();
  return d;
}

OrientationField read_field(Reader& r) {
  const auto bs = r.u32();
  const auto wb = r.u32();
  const auto hb = r.u32();
  const std::size_t n = static_cast<std::size_t>(wb) * hb;
  if (n * 9 > r.remaining()) throw Error(ErrorCode::TruncatedPayload, "orientation field truncated");
  OrientationField f(static_cast<int>(bs), static_cast<int>(wb), static_cast<int>(hb));
  for (auto& t : f.theta) t = r.f64();
  for (auto& m : f.mask) m = r.u8();
  return f;
}

struct Sections {
  std::optional<std::span<const std::uint8_t>> meta, minutiae, field, descriptors;
};

Sections read_sections(Reader& r) {
  Sections s;
  while (!r.at_end()) {
    const auto tag = r.u32();
    const auto len = r.u32();
    auto payload = r.take(len);
    if (tag == kTagMeta) s.meta = payload;
    else if (tag == kTagMinutiae) s.minutiae = payload;
    else if (tag == kTagField) s.field = payload;
    else if (tag == kTagDescriptors) s.descriptors = payload;
    else throw Error(ErrorCode::MalformedPayload, "unknown section tag");
  }
  return s;
}

template <typename Fn>
auto parse_section(std::span<const std::uint8_t> payload, Fn&& fn) {
  Reader r(payload);
  auto out = fn(r);
  if (!r.at_end()) throw Error(ErrorCode::MalformedPayload, "section has trailing bytes");
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_template(const MinutiaeTemplate& t) {
  Writer w;
  write_header(w, kKindMinutiae, static_cast<std::uint8_t>(t.variant));
  {
    Writer p;
    p.str(t.source_id);
    p.f64(t.width);
    p.f64(t.height);
    write_section(w, kTagMeta, p);
  }
  write_minutiae(w, t.minutiae);
  {
    Writer p;
    const auto& f = t.field;
    p.u32(static_cast<std::uint32_t>(f.block_size));
    p.u32(static_cast<std::uint32_t>(f.width_blocks));
    p.u32(static_cast<std::uint32_t>(f.height_blocks));
    for (double v : f.theta) p.f64(v);
    for (auto m : f.mask) p.u8(m);
    write_section(w, kTagField, p);
  }
  write_descriptors(w, t.descriptors);
  return std::move(w.bytes());
}

std::vector<std::uint8_t> encode_template(const TextureTemplate& t) {
  Writer w;
  write_header(w, kKindTexture, static_cast<std::uint8_t>(t.side));
  {
    Writer p;
    p.str(t.source_id);
    p.f64(t.width);
    p.f64(t.height);
    p.u32(static_cast<std::uint32_t>(t.block_size));
    write_section(w, kTagMeta, p);
  }
  write_minutiae(w, t.virtual_minutiae);
  write_descriptors(w, t.descriptors);
  return std::move(w.bytes());
}

AnyTemplate decode_template(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedPayload, "file shorter than magic");
  if (std::memcmp(bytes.data(), "LFRT", 4) != 0) throw Error(ErrorCode::MagicMismatch, "not an LFRT template");
  Reader r(bytes.subspan(4));
  const auto version = r.u16();
  if (version != kTemplateFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "template version " + std::to_string(version));
  }
  const auto kind = r.u8();
  const auto variant = r.u8();
  if (kind != kKindMinutiae && kind != kKindTexture) throw Error(ErrorCode::MalformedPayload, "unknown template kind");

  const Sections s = read_sections(r);
  const bool complete = s.meta && s.minutiae && s.descriptors && (kind == kKindTexture || s.field);
  // A file cut at a section boundary still parses section-by-section but lacks the tail.
  if (!complete) throw Error(ErrorCode::TruncatedPayload, "required section missing");

  if (kind == kKindMinutiae) {
    if (variant > 2) throw Error(ErrorCode::MalformedPayload, "unknown template variant");
    MinutiaeTemplate t;
    t.variant = static_cast<TemplateVariant>(variant);
    parse_section(*s.meta, [&](Reader& m) {
      t.source_id = m.str();
      t.width = m.f64();
      t.height = m.f64();
      return 0;
    });
    t.minutiae = parse_section(*s.minutiae, read_minutiae);
    t.field = parse_section(*s.field, read_field);
    t.descriptors = parse_section(*s.descriptors, read_descriptors);
    return t;
  }
  if (variant > 1) throw Error(ErrorCode::MalformedPayload, "unknown texture side");
  TextureTemplate t;
  t.side = static_cast<TextureSide>(variant);
  parse_section(*s.meta, [&](Reader& m) {
    t.source_id = m.str();
    t.width = m.f64();
    t.height = m.f64();
    t.block_size = static_cast<int>(m.u32());
    return 0;
  });
  t.virtual_minutiae = parse_section(*s.minutiae, read_minutiae);
  t.descriptors = parse_section(*s.descriptors, read_descriptors);
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void save_template(const MinutiaeTemplate& t, const std::filesystem::path& path) {
  write_file_bytes(path, encode_template(t));
}

void save_template(const TextureTemplate& t, const std::filesystem::path& path) {
  write_file_bytes(path, encode_template(t));
}

AnyTemplate load_template(const std::filesystem::path& path) { return decode_template(read_file_bytes(path)); }

MinutiaeTemplate load_minutiae_template(const std::filesystem::path& path) {
  auto t = load_template(path);
  if (auto* m = std::get_if<MinutiaeTemplate>(&t)) return std::move(*m);
  throw Error(ErrorCode::MalformedPayload, path.string() + " is a texture template");
}

TextureTemplate load_texture_template(const std::filesystem::path& path) {
  auto t = load_template(path);
  if (auto* m = std::get_if<TextureTemplate>(&t)) return std::move(*m);
  throw Error(ErrorCode::MalformedPayload, path.string() + " is a minutiae template");
}

}  // namespace lfid
