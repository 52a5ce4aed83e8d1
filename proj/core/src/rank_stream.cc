// Copyright 2026 The rbpk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rbpk/rank_stream.h"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <system_error>
#include <utility>

#include "rbpk/error.h"

namespace rbpk {
namespace {

namespace fs = std::filesystem;

template <typename T>
void PutLe(std::string& buf, T value) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T GetLe(const unsigned char* p) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(p[i]) << (8 * i);
  }
  return static_cast<T>(u);
}

void PutString(std::string& buf, const std::string& s) {
  PutLe<std::uint16_t>(buf, static_cast<std::uint16_t>(s.size()));
  buf.append(s);
}

std::string EncodeHeader(const StreamMeta& meta) {
  std::string buf(kStreamMagic, sizeof(kStreamMagic));
  PutLe<std::uint16_t>(buf, kStreamVersion);
  PutLe<std::uint16_t>(buf, meta.has_logprob ? kFlagHasLogprob : 0);
  PutLe<std::uint32_t>(buf, meta.vocab_size);
  PutLe<std::uint64_t>(buf, meta.model_size);
  PutLe<std::uint64_t>(buf, meta.token_count);
  PutString(buf, meta.model_id);
  PutString(buf, meta.corpus_id);
  return buf;
}

void EncodeRecord(std::string& buf, const RankRecord& r, bool has_logprob) {
  PutLe<std::uint32_t>(buf, r.rank);
  if (has_logprob) {
    PutLe<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(*r.gt_logprob));
  }
}

fs::path TmpSibling(const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  return tmp;
}

void CommitTmp(const fs::path& tmp, const fs::path& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorKind::kIo, "cannot rename " + tmp.string() + " to " +
                                    path.string() + ": " + ec.message());
  }
}

fs::path MetaSidecar(const fs::path& path) {
  fs::path p = path;
  p += ".meta";
  return p;
}

fs::path DocsSidecar(const fs::path& path) {
  fs::path p = path;
  p += ".docs";
  return p;
}

template <typename T>
bool ParseNumber(std::string_view s, T* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

void ValidateMeta(const StreamMeta& meta) {
  if (meta.vocab_size < 2) {
    throw Error(ErrorKind::kValidation, "vocab_size must be >= 2, got " +
                                            std::to_string(meta.vocab_size));
  }
  if (meta.model_size == 0) {
    throw Error(ErrorKind::kValidation, "model_size must be positive");
  }
  constexpr std::size_t kMaxId = std::numeric_limits<std::uint16_t>::max();
  if (meta.model_id.size() > kMaxId || meta.corpus_id.size() > kMaxId) {
    throw Error(ErrorKind::kValidation, "model_id/corpus_id exceed 65535 bytes");
  }
}

void ValidateRecord(const RankRecord& record, const StreamMeta& meta) {
  if (record.rank < 1 || record.rank > meta.vocab_size) {
    throw Error(ErrorKind::kValidation,
                "rank " + std::to_string(record.rank) + " outside [1, " +
                    std::to_string(meta.vocab_size) + "]");
  }
  if (meta.has_logprob != record.gt_logprob.has_value()) {
    throw Error(ErrorKind::kValidation,
                meta.has_logprob ? "record lacks gt_logprob"
                                 : "record carries gt_logprob but stream has none");
  }
  if (record.gt_logprob && !(*record.gt_logprob <= 0.0f)) {
    throw Error(ErrorKind::kValidation, "gt_logprob must be <= 0");
  }
}

void WriteRankStream(const StreamMeta& meta, std::span<const RankRecord> records,
                     const fs::path& path) {
  if (meta.token_count != records.size()) {
    throw Error(ErrorKind::kValidation,
                "meta.token_count=" + std::to_string(meta.token_count) +
                    " but " + std::to_string(records.size()) + " records given");
  }
  RankStreamWriter writer(path, meta);
  for (const RankRecord& r : records) writer.Append(r);
  writer.Close();
}

RankStreamWriter::RankStreamWriter(const fs::path& path, StreamMeta meta)
    : path_(path), tmp_path_(TmpSibling(path)), meta_(std::move(meta)) {
  ValidateMeta(meta_);
  out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorKind::kIo, "cannot open " + tmp_path_.string());
  const std::string header = EncodeHeader(meta_);
  out_.write(header.data(), static_cast<std::streamsize>(header.size()));
}

RankStreamWriter::~RankStreamWriter() {
  if (!closed_) {
    out_.close();
    std::error_code ec;
    fs::remove(tmp_path_, ec);
  }
}

void RankStreamWriter::Append(const RankRecord& record) {
  ValidateRecord(record, meta_);
  if (written_ == meta_.token_count) {
    throw Error(ErrorKind::kValidation, "more records than meta.token_count");
  }
  std::string buf;
  EncodeRecord(buf, record, meta_.has_logprob);
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  ++written_;
}

void RankStreamWriter::Close() {
  if (closed_) return;
  if (written_ != meta_.token_count) {
    throw Error(ErrorKind::kValidation,
                "wrote " + std::to_string(written_) + " records, meta declares " +
                    std::to_string(meta_.token_count));
  }
  out_.flush();
  if (!out_) throw Error(ErrorKind::kIo, "write failed: " + tmp_path_.string());
  out_.close();
  CommitTmp(tmp_path_, path_);
  closed_ = true;
}

struct RankStreamReader::Impl {
  enum class Mode { kBinary, kText };

  fs::path path;
  Mode mode = Mode::kBinary;
  std::ifstream in;
  StreamMeta meta;
  std::uint64_t offset = 0;
  std::uint64_t read_count = 0;
  bool finished = false;

  void ReadExact(unsigned char* dst, std::size_t n, ErrorKind short_kind,
                 const char* what) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw Error(short_kind, path.string() + ": truncated " + what,
                  offset + static_cast<std::uint64_t>(in.gcount()));
    }
    offset += n;
  }

  std::string ReadString(const char* what) {
    unsigned char len_bytes[2];
    ReadExact(len_bytes, 2, ErrorKind::kCorruption, what);
    const auto len = GetLe<std::uint16_t>(len_bytes);
    std::string s(len, '\0');
    if (len > 0) {
      ReadExact(reinterpret_cast<unsigned char*>(s.data()), len,
                ErrorKind::kCorruption, what);
    }
    return s;
  }

  void OpenBinary() {
    unsigned char fixed[24];
    ReadExact(fixed, sizeof(fixed), ErrorKind::kCorruption, "header");
    const auto version = GetLe<std::uint16_t>(fixed);
    if (version != kStreamVersion) {
      throw Error(ErrorKind::kFormat, path.string() + ": unsupported version " +
                                          std::to_string(version));
    }
    const auto flags = GetLe<std::uint16_t>(fixed + 2);
    if ((flags & ~kFlagHasLogprob) != 0) {
      throw Error(ErrorKind::kFormat,
                  path.string() + ": unknown flag bits " + std::to_string(flags));
    }
    meta.has_logprob = (flags & kFlagHasLogprob) != 0;
    meta.vocab_size = GetLe<std::uint32_t>(fixed + 4);
    meta.model_size = GetLe<std::uint64_t>(fixed + 8);
    meta.token_count = GetLe<std::uint64_t>(fixed + 16);
    meta.model_id = ReadString("model_id");
    meta.corpus_id = ReadString("corpus_id");
    ValidateMeta(meta);
  }

  void OpenText() {
    const fs::path sidecar = MetaSidecar(path);
    std::ifstream meta_in(sidecar);
    if (!meta_in) {
      throw Error(ErrorKind::kFormat,
                  path.string() + ": bad magic and no .meta sidecar");
    }
    std::string line;
    bool have_count = false, have_vocab = false;
    while (std::getline(meta_in, line)) {
      std::string_view v = Trim(line);
      if (v.empty() || v.front() == '#') continue;
      const auto eq = v.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorKind::kFormat, sidecar.string() + ": expected key=value");
      }
      const std::string_view key = Trim(v.substr(0, eq));
      const std::string_view val = Trim(v.substr(eq + 1));
      bool ok = true;
      if (key == "model_id") {
        meta.model_id = val;
      } else if (key == "corpus_id") {
        meta.corpus_id = val;
      } else if (key == "model_size") {
        ok = ParseNumber(val, &meta.model_size);
      } else if (key == "vocab_size") {
        ok = ParseNumber(val, &meta.vocab_size);
        have_vocab = true;
      } else if (key == "token_count") {
        ok = ParseNumber(val, &meta.token_count);
        have_count = true;
      } else if (key == "has_logprob") {
        meta.has_logprob = (val == "1" || val == "true");
      }
      if (!ok) {
        throw Error(ErrorKind::kFormat,
                    sidecar.string() + ": bad value for " + std::string(key));
      }
    }
    if (!have_count || !have_vocab) {
      throw Error(ErrorKind::kFormat,
                  sidecar.string() + ": token_count and vocab_size are required");
    }
    ValidateMeta(meta);
    in.clear();
    in.seekg(0);
    offset = 0;
  }

  bool NextBinary(RankRecord* record) {
    unsigned char buf[8];
    const std::size_t n = meta.has_logprob ? 8 : 4;
    ReadExact(buf, n, ErrorKind::kCorruption, "record body");
    record->rank = GetLe<std::uint32_t>(buf);
    if (meta.has_logprob) {
      record->gt_logprob = std::bit_cast<float>(GetLe<std::uint32_t>(buf + 4));
    } else {
      record->gt_logprob.reset();
    }
    return true;
  }

  bool NextText(RankRecord* record) {
    std::string line;
    while (true) {
      const std::uint64_t line_start = offset;
      if (!std::getline(in, line)) {
        throw Error(ErrorKind::kCorruption,
                    path.string() + ": truncated record body", line_start);
      }
      offset += line.size() + 1;
      std::string_view v = Trim(line);
      if (v.empty()) continue;
      const auto comma = v.find(',');
      const std::string_view rank_part =
          Trim(comma == std::string_view::npos ? v : v.substr(0, comma));
      if (!ParseNumber(rank_part, &record->rank)) {
        throw Error(ErrorKind::kCorruption, path.string() + ": bad rank field",
                    line_start);
      }
      record->gt_logprob.reset();
      if (comma != std::string_view::npos) {
        float lp = 0.0f;
        if (!ParseNumber(Trim(v.substr(comma + 1)), &lp)) {
          throw Error(ErrorKind::kCorruption,
                      path.string() + ": bad logprob field", line_start);
        }
        record->gt_logprob = lp;
      }
      return true;
    }
  }

  void CheckTrailing() {
    if (mode == Mode::kBinary) {
      if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(ErrorKind::kCorruption,
                    path.string() + ": trailing bytes after last record", offset);
      }
      return;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (!Trim(line).empty()) {
        throw Error(ErrorKind::kCorruption,
                    path.string() + ": more records than token_count", offset);
      }
      offset += line.size() + 1;
    }
  }
};

RankStreamReader::RankStreamReader(const fs::path& path)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->in.open(path, std::ios::binary);
  if (!impl_->in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::array<char, 4> magic{};
  impl_->in.read(magic.data(), 4);
  if (impl_->in.gcount() == 4 &&
      std::memcmp(magic.data(), kStreamMagic, 4) == 0) {
    impl_->offset = 4;
    impl_->mode = Impl::Mode::kBinary;
    impl_->OpenBinary();
  } else if (fs::exists(MetaSidecar(path))) {
    impl_->mode = Impl::Mode::kText;
    impl_->OpenText();
  } else {
    throw Error(ErrorKind::kFormat, path.string() + ": bad magic", 0);
  }
}

RankStreamReader::~RankStreamReader() = default;
RankStreamReader::RankStreamReader(RankStreamReader&&) noexcept = default;
RankStreamReader& RankStreamReader::operator=(RankStreamReader&&) noexcept =
    default;

const StreamMeta& RankStreamReader::meta() const { return impl_->meta; }

bool RankStreamReader::Next(RankRecord* record) {
  Impl& s = *impl_;
  if (s.finished) return false;
  if (s.read_count == s.meta.token_count) {
    s.CheckTrailing();
    s.finished = true;
    return false;
  }
  const std::uint64_t record_offset = s.offset;
  if (s.mode == Impl::Mode::kBinary) {
    s.NextBinary(record);
  } else {
    s.NextText(record);
  }
  try {
    ValidateRecord(*record, s.meta);
  } catch (const Error& e) {
    throw Error(ErrorKind::kValidation, s.path.string() + ": " + e.what(),
                record_offset);
  }
  ++s.read_count;
  return true;
}

RankStream ReadRankStream(const fs::path& path) {
  RankStreamReader reader(path);
  RankStream out{reader.meta(), {}};
  out.records.reserve(static_cast<std::size_t>(
      std::min<std::uint64_t>(out.meta.token_count, 1u << 24)));
  RankRecord r;
  while (reader.Next(&r)) out.records.push_back(r);
  return out;
}

void WriteRankStreamText(const StreamMeta& meta,
                         std::span<const RankRecord> records,
                         const fs::path& path) {
  ValidateMeta(meta);
  if (meta.token_count != records.size()) {
    throw Error(ErrorKind::kValidation, "meta.token_count != records.size()");
  }
  {
    const fs::path tmp = TmpSibling(path);
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open " + tmp.string());
    char buf[64];
    for (const RankRecord& r : records) {
      ValidateRecord(r, meta);
      auto res = std::to_chars(buf, buf + sizeof(buf), r.rank);
      out.write(buf, res.ptr - buf);
      if (r.gt_logprob) {
        out.put(',');
        res = std::to_chars(buf, buf + sizeof(buf), *r.gt_logprob);
        out.write(buf, res.ptr - buf);
      }
      out.put('\n');
    }
    if (!out) throw Error(ErrorKind::kIo, "write failed: " + tmp.string());
    out.close();
    CommitTmp(tmp, path);
  }
  const fs::path sidecar = MetaSidecar(path);
  std::ofstream m(sidecar, std::ios::trunc);
  if (!m) throw Error(ErrorKind::kIo, "cannot open " + sidecar.string());
  m << "model_id=" << meta.model_id << '\n'
    << "model_size=" << meta.model_size << '\n'
    << "vocab_size=" << meta.vocab_size << '\n'
    << "corpus_id=" << meta.corpus_id << '\n'
    << "token_count=" << meta.token_count << '\n'
    << "has_logprob=" << (meta.has_logprob ? 1 : 0) << '\n';
  if (!m) throw Error(ErrorKind::kIo, "write failed: " + sidecar.string());
}

std::vector<std::uint64_t> ReadDocumentStarts(const fs::path& stream_path) {
  std::vector<std::uint64_t> starts;
  const fs::path sidecar = DocsSidecar(stream_path);
  std::ifstream in(sidecar);
  if (!in) return starts;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = Trim(line);
    if (v.empty() || v.front() == '#') continue;
    std::uint64_t idx = 0;
    if (!ParseNumber(v, &idx)) {
      throw Error(ErrorKind::kFormat, sidecar.string() + ": bad offset '" +
                                          std::string(v) + "'");
    }
    starts.push_back(idx);
  }
  return starts;
}

void WriteDocumentStarts(const fs::path& stream_path,
                         std::span<const std::uint64_t> starts) {
  const fs::path sidecar = DocsSidecar(stream_path);
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + sidecar.string());
  for (std::uint64_t s : starts) out << s << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + sidecar.string());
}

RankHistogram RankHistogram::Empty(const StreamMeta& meta) {
  RankHistogram h;
  h.meta = meta;
  h.meta.token_count = 0;
  if (meta.has_logprob) h.logprob_sum = 0.0;
  return h;
}

void RankHistogram::Add(const RankRecord& record) {
  ++counts[record.rank];
  ++total;
  meta.token_count = total;
  if (logprob_sum && record.gt_logprob) *logprob_sum += *record.gt_logprob;
}

namespace {

// Dense per-rank counters for bulk accumulation; folded into the sparse
// map once at the end. Falls back to the map for very large vocabularies.
constexpr std::uint32_t kDenseVocabLimit = 1u << 24;

class BulkAccumulator {
 public:
  explicit BulkAccumulator(const StreamMeta& meta) : hist_(RankHistogram::Empty(meta)) {
    if (meta.vocab_size <= kDenseVocabLimit) dense_.assign(meta.vocab_size + 1, 0);
  }

  void Add(const RankRecord& r) {
    if (dense_.empty()) {
      hist_.Add(r);
      return;
    }
    ++dense_[r.rank];
    ++total_;
    if (r.gt_logprob) logprob_sum_ += *r.gt_logprob;
  }

  RankHistogram Finish() && {
    if (dense_.empty()) return std::move(hist_);
    for (std::uint32_t rank = 1; rank < dense_.size(); ++rank) {
      if (dense_[rank] != 0) hist_.counts.emplace_hint(hist_.counts.end(), rank, dense_[rank]);
    }
    hist_.total = total_;
    hist_.meta.token_count = total_;
    if (hist_.logprob_sum) *hist_.logprob_sum = logprob_sum_;
    return std::move(hist_);
  }

 private:
  RankHistogram hist_;
  std::vector<std::uint64_t> dense_;
  std::uint64_t total_ = 0;
  double logprob_sum_ = 0.0;
};

}  // namespace

RankHistogram AccumulateHistogram(std::span<const RankRecord> records,
                                  const StreamMeta& meta) {
  BulkAccumulator acc(meta);
  for (const RankRecord& r : records) {
    ValidateRecord(r, meta);
    acc.Add(r);
  }
  return std::move(acc).Finish();
}

RankHistogram AccumulateHistogram(RankStreamReader& reader) {
  BulkAccumulator acc(reader.meta());
  RankRecord r;
  while (reader.Next(&r)) acc.Add(r);  // Next() validates
  return std::move(acc).Finish();
}

RankHistogram AccumulateHistogram(const fs::path& path) {
  RankStreamReader reader(path);
  return AccumulateHistogram(reader);
}

RankHistogram MergeHistograms(const RankHistogram& a, const RankHistogram& b) {
  if (a.meta.model_id != b.meta.model_id || a.meta.corpus_id != b.meta.corpus_id ||
      a.meta.vocab_size != b.meta.vocab_size ||
      a.meta.has_logprob != b.meta.has_logprob) {
    throw Error(ErrorKind::kMerge,
                "cannot merge histograms of (" + a.meta.model_id + ", " +
                    a.meta.corpus_id + ") and (" + b.meta.model_id + ", " +
                    b.meta.corpus_id + ") with differing vocab/logprob metadata");
  }
  RankHistogram out = a;
  for (const auto& [rank, count] : b.counts) out.counts[rank] += count;
  out.total = a.total + b.total;
  out.meta.token_count = out.total;
  if (out.logprob_sum && b.logprob_sum) *out.logprob_sum += *b.logprob_sum;
  return out;
}

}  // namespace rbpk
