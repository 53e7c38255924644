#include "olu/stream_io.hpp"

#include "olu/error.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include <array>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace olu {

namespace {

constexpr std::uint8_t kQuadraticTag = 0;
constexpr std::uint8_t kLogisticTag = 1;

void put_doubles(std::string& buf, const double* p, std::size_t n) {
  const auto* b = reinterpret_cast<const char*>(p);
  buf.append(b, b + n * sizeof(double));
}

std::uint64_t parse_u64(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw Error(Errc::ParseError, "stream line " + std::to_string(line) + ": bad integer '" +
                                      std::string(s) + "'");
  return v;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<const char*, 6, 8>>;
  std::string out(It(bytes.data()), It(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::string base64_decode(std::string_view text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<const char*>, 8, 6>;
  if (text.size() % 4 != 0) throw Error(Errc::ParseError, "base64 length is not a multiple of 4");
  std::string padded(text);
  std::size_t pad = 0;
  for (auto it = padded.rbegin(); it != padded.rend() && *it == '='; ++it) {
    *it = 'A';
    ++pad;
  }
  if (pad > 2) throw Error(Errc::ParseError, "bad base64 padding");
  try {
    std::string out(It(padded.data()), It(padded.data() + padded.size()));
    out.resize(out.size() - pad);
    return out;
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "invalid base64 payload");
  }
}

std::string encode_payload(const SamplePayload& p) {
  std::string buf;
  const auto d = static_cast<std::uint32_t>(payload_dimension(p));
  if (const auto* q = std::get_if<QuadraticSample>(&p)) {
    buf.push_back(static_cast<char>(kQuadraticTag));
    buf.append(reinterpret_cast<const char*>(&d), sizeof d);
    put_doubles(buf, q->minimizer.data(), d);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> h = *q->hessian;
    put_doubles(buf, h.data(), static_cast<std::size_t>(h.size()));
  } else {
    const auto& s = std::get<LogisticSample>(p);
    buf.push_back(static_cast<char>(kLogisticTag));
    buf.append(reinterpret_cast<const char*>(&d), sizeof d);
    put_doubles(buf, s.features.data(), d);
    put_doubles(buf, &s.label, 1);
  }
  return base64_encode(buf);
}

SamplePayload decode_payload(std::string_view blob, const std::shared_ptr<const Matrix>& previous) {
  const std::string raw = base64_decode(blob);
  if (raw.size() < 5) throw Error(Errc::ParseError, "payload too short");
  const auto tag = static_cast<std::uint8_t>(raw[0]);
  std::uint32_t d = 0;
  std::memcpy(&d, raw.data() + 1, sizeof d);
  const std::size_t needed =
      tag == kQuadraticTag ? std::size_t{d} + std::size_t{d} * d : std::size_t{d} + 1;
  if (tag > kLogisticTag || d == 0 || raw.size() != 5 + needed * sizeof(double))
    throw Error(Errc::ParseError, "payload size does not match its header");
  std::vector<double> vals(needed);
  std::memcpy(vals.data(), raw.data() + 5, needed * sizeof(double));
  const Eigen::Map<const Vector> head(vals.data(), d);
  if (tag == kQuadraticTag) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        h(vals.data() + d, d, d);
    std::shared_ptr<const Matrix> hessian;
    if (previous && previous->rows() == d && *previous == h) hessian = previous;
    else hessian = std::make_shared<const Matrix>(h);
    return QuadraticSample{std::move(hessian), head};
  }
  return LogisticSample{head, vals[d]};
}

void write_stream(std::ostream& out, const EventStream& stream) {
  out << "# olu-stream v1\n";
  out << "# regime=" << to_string(stream.regime) << " dimension=" << stream.dimension
      << " seed=" << stream.seed << '\n';
  out << "# time,op,index,payload\n";
  for (const auto& e : stream.events) {
    out << e.time << ',' << (e.is_insert() ? "insert" : "delete") << ',' << e.index << ',';
    if (e.payload) out << encode_payload(*e.payload);
    out << '\n';
  }
}

EventStream read_stream(std::istream& in) {
  EventStream s;
  std::string line;
  std::size_t n = 0;
  std::shared_ptr<const Matrix> last_hessian;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const auto key = tok.substr(0, eq);
        const auto val = tok.substr(eq + 1);
        if (key == "regime") s.regime = parse_regime(val);
        else if (key == "dimension") s.dimension = static_cast<Eigen::Index>(parse_u64(val, n));
        else if (key == "seed") s.seed = parse_u64(val, n);
      }
      continue;
    }
    std::array<std::string_view, 4> f;
    std::string_view rest = line;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto c = i < 3 ? rest.find(',') : std::string_view::npos;
      if (i < 3 && c == std::string_view::npos)
        throw Error(Errc::ParseError, "stream line " + std::to_string(n) + ": expected 4 fields");
      f[i] = rest.substr(0, c);
      if (i < 3) rest.remove_prefix(c + 1);
    }
    const std::uint64_t time = parse_u64(f[0], n);
    const SampleIndex index = parse_u64(f[2], n);
    if (f[1] == "insert") {
      SamplePayload p = decode_payload(f[3], last_hessian);
      if (const auto* q = std::get_if<QuadraticSample>(&p)) last_hessian = q->hessian;
      if (s.dimension == 0) s.dimension = payload_dimension(p);
      if (payload_dimension(p) != s.dimension)
        throw Error(Errc::DimensionMismatch, "stream line " + std::to_string(n) +
                                                 ": payload dimension differs from header");
      s.events.push_back(Event::insert(time, index, std::move(p)));
    } else if (f[1] == "delete") {
      s.events.push_back(Event::remove(time, index));
    } else {
      throw Error(Errc::ParseError, "stream line " + std::to_string(n) + ": unknown op '" +
                                        std::string(f[1]) + "'");
    }
  }
  return s;
}

}  // namespace olu
