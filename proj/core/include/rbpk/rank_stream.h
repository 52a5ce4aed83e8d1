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

// Token-rank streams: the per-token observation record, the canonical
// on-disk format, and the mergeable rank histogram built from a stream.
//
// Binary layout (little-endian):
//
//   offset  size  field
//   0       4     magic "RBPK"
//   4       2     version (u16) = 1
//   6       2     flags (u16), bit 0 = has_logprob
//   8       4     vocab_size (u32)
//   12      8     model_size (u64)
//   20      8     token_count (u64)
//   28      2+n   model_id  (u16 length, UTF-8 bytes)
//   ..      2+m   corpus_id (u16 length, UTF-8 bytes)
//   then token_count records of: rank (u32) [, gt_logprob (f32)]
//
// The text twin stores one record per line as "rank" or "rank,logprob" and
// keeps the metadata in a "<path>.meta" sidecar of key=value lines.

#ifndef RBPK_RANK_STREAM_H_
#define RBPK_RANK_STREAM_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rbpk {

inline constexpr char kStreamMagic[4] = {'R', 'B', 'P', 'K'};
inline constexpr std::uint16_t kStreamVersion = 1;
inline constexpr std::uint16_t kFlagHasLogprob = 0x1;

// One token's ground-truth rank (1 = top-scored) and, optionally, the
// natural-log probability the model assigned to the ground truth.
struct RankRecord {
  std::uint32_t rank = 1;
  std::optional<float> gt_logprob;

  friend bool operator==(const RankRecord&, const RankRecord&) = default;
};

struct StreamMeta {
  std::string model_id;
  std::uint64_t model_size = 1;  // non-embedding parameter count
  std::uint32_t vocab_size = 2;
  std::string corpus_id;
  std::uint64_t token_count = 0;
  bool has_logprob = false;

  friend bool operator==(const StreamMeta&, const StreamMeta&) = default;
};

// Throws kValidation on vocab_size < 2, model_size == 0, or ids too long.
void ValidateMeta(const StreamMeta& meta);
// Throws kValidation if the record does not fit the stream's metadata.
void ValidateRecord(const RankRecord& record, const StreamMeta& meta);

// Writes a whole stream. Output goes to a temporary sibling file that is
// renamed into place only after every record has been written.
void WriteRankStream(const StreamMeta& meta, std::span<const RankRecord> records,
                     const std::filesystem::path& path);

// Incremental writer for streams too large to hold in memory. Close()
// checks that exactly meta.token_count records were appended.
class RankStreamWriter {
 public:
  RankStreamWriter(const std::filesystem::path& path, StreamMeta meta);
  ~RankStreamWriter();
  RankStreamWriter(const RankStreamWriter&) = delete;
  RankStreamWriter& operator=(const RankStreamWriter&) = delete;

  void Append(const RankRecord& record);
  void Close();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_path_;
  StreamMeta meta_;
  std::ofstream out_;
  std::uint64_t written_ = 0;
  bool closed_ = false;
};

// Lazy reader over either the binary format or the text twin (detected
// from the leading magic bytes). Records are validated as they are read;
// reaching the end before token_count records, or trailing bytes after
// them, raises kCorruption with the byte offset.
class RankStreamReader {
 public:
  explicit RankStreamReader(const std::filesystem::path& path);
  ~RankStreamReader();
  RankStreamReader(RankStreamReader&&) noexcept;
  RankStreamReader& operator=(RankStreamReader&&) noexcept;

  const StreamMeta& meta() const;
  // Returns false once all token_count records have been consumed.
  bool Next(RankRecord* record);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RankStream {
  StreamMeta meta;
  std::vector<RankRecord> records;
};

// Convenience for tests and small inputs; materializes every record.
RankStream ReadRankStream(const std::filesystem::path& path);

void WriteRankStreamText(const StreamMeta& meta,
                         std::span<const RankRecord> records,
                         const std::filesystem::path& path);

// Document start offsets (record indices) from the optional "<path>.docs"
// sidecar, one per line. Empty when the sidecar is absent.
std::vector<std::uint64_t> ReadDocumentStarts(
    const std::filesystem::path& stream_path);
void WriteDocumentStarts(const std::filesystem::path& stream_path,
                         std::span<const std::uint64_t> starts);

// Counts of ranks: the sufficient statistic for every RBP_k and, with the
// log-probability sum, for cross-entropy.
struct RankHistogram {
  StreamMeta meta;  // meta.token_count tracks total
  std::map<std::uint32_t, std::uint64_t> counts;
  std::uint64_t total = 0;
  std::optional<double> logprob_sum;

  static RankHistogram Empty(const StreamMeta& meta);
  void Add(const RankRecord& record);

  friend bool operator==(const RankHistogram&, const RankHistogram&) = default;
};

RankHistogram AccumulateHistogram(std::span<const RankRecord> records,
                                  const StreamMeta& meta);
RankHistogram AccumulateHistogram(RankStreamReader& reader);
RankHistogram AccumulateHistogram(const std::filesystem::path& path);

// Pointwise sum. Throws kMerge unless model_id, corpus_id, vocab_size and
// has_logprob agree.
RankHistogram MergeHistograms(const RankHistogram& a, const RankHistogram& b);

}  // namespace rbpk

#endif  // RBPK_RANK_STREAM_H_
