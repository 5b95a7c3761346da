#include "loadlab/assign.hpp"

#include <algorithm>
#include <limits>

#include "loadlab/csv.hpp"
#include "loadlab/dtw.hpp"
#include "loadlab/error.hpp"
#include "loadlab/parallel.hpp"

namespace loadlab {

LabelingResult label_full_dataset(std::span<const DailyProfile> profiles,
                                  std::span<const HourlyValues> medoids, unsigned threads) {
  if (medoids.empty()) throw DataError("label_full_dataset: no medoids");
  LabelingResult result;
  result.labels.resize(profiles.size());
  parallel_for(
      profiles.size(), threads,
      [&](std::size_t i) {
        const auto& p = profiles[i];
        auto& out = result.labels[i];
        out.key = p.key();
        out.age_days = p.age_days;
        if (!p.complete) return;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < medoids.size(); ++m) {
          double dist = dtw_distance(p.hours, medoids[m]);
          if (dist < best) {
            best = dist;
            out.cluster = static_cast<ClusterId>(m);
          }
        }
        out.distance = best;
      },
      256);
  for (const auto& p : profiles) result.excluded_incomplete += !p.complete;
  return result;
}

std::vector<std::optional<ClusterId>> household_sequence(std::span<const LabeledProfile> labels,
                                                         std::string_view household_id) {
  std::vector<const LabeledProfile*> mine;
  for (const auto& l : labels)
    if (l.key.household_id == household_id) mine.push_back(&l);
  if (mine.empty()) throw DataError("unknown household " + std::string(household_id));
  std::sort(mine.begin(), mine.end(),
            [](const auto* a, const auto* b) { return a->age_days < b->age_days; });
  const int first = mine.front()->age_days;
  std::vector<std::optional<ClusterId>> seq(
      static_cast<std::size_t>(mine.back()->age_days - first + 1));
  for (const auto* l : mine)
    if (l->cluster != kUnassigned) seq[static_cast<std::size_t>(l->age_days - first)] = l->cluster;
  return seq;
}

void write_labels_csv(const std::filesystem::path& path, std::span<const LabeledProfile> labels) {
  auto out = csv::open_output(path);
  std::string buf = "household_id,date,age_days,cluster,distance\n";
  for (const auto& l : labels) {
    buf += l.key.household_id;
    buf += ',';
    buf += format_date(l.key.date);
    buf += ',';
    buf += std::to_string(l.age_days);
    if (l.cluster == kUnassigned) {
      buf += ",unassigned,\n";
    } else {
      buf += ',';
      buf += std::to_string(l.cluster);
      buf += ',';
      csv::append_fixed(buf, l.distance, 6);
      buf += '\n';
    }
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<LabeledProfile> read_labels_csv(const std::filesystem::path& path) {
  csv::Reader reader(path);
  reader.expect_header("household_id,date,age_days,cluster,distance");
  std::vector<LabeledProfile> labels;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    auto fail = [&](const char* what) {
      throw DataError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + what);
    };
    if (f.size() != 5) fail("expected 5 fields");
    LabeledProfile l;
    l.key.household_id = std::string(f[0]);
    long long age = 0, cluster = 0;
    if (!parse_date(f[1], l.key.date)) fail("bad date");
    if (!csv::parse_int(f[2], age) || age < 0) fail("bad age_days");
    l.age_days = static_cast<int>(age);
    if (f[3] == "unassigned") {
      l.cluster = kUnassigned;
    } else {
      if (!csv::parse_int(f[3], cluster) || cluster < 0) fail("bad cluster");
      if (!csv::parse_double(f[4], l.distance)) fail("bad distance");
      l.cluster = static_cast<ClusterId>(cluster);
    }
    labels.push_back(std::move(l));
  }
  return labels;
}

}  // namespace loadlab
