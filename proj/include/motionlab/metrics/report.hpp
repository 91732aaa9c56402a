#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "motionlab/io.hpp"
#include "motionlab/metrics/quality.hpp"

namespace motionlab::metrics {

struct ReportRow {
  std::string codec;
  std::string params;
  std::string clip;
  QualityReport quality;
};

inline const char* kReportHeader = "codec,params,clip,bpp,psnr,ssim,epe,cosine,encode_s,decode_s\n";

namespace detail {
inline std::string num(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}
}  // namespace detail

/// CSV text. Timing columns are NA unless requested, so reports from
/// repeated runs compare byte for byte.
inline std::string format_report(const std::vector<ReportRow>& rows, bool timings = false) {
  std::string s = kReportHeader;
  for (const auto& r : rows) {
    const auto& q = r.quality;
    s += r.codec + "," + r.params + "," + r.clip + "," + detail::num("%.8g", q.bpp) + "," +
         detail::num("%.4f", q.psnr_mean) + "," + detail::num("%.6f", q.ssim_mean) + "," +
         detail::num("%.8g", q.epe) + "," + detail::num("%.6f", q.cosine) + ",";
    s += timings ? detail::num("%.4f", q.encode_s) + "," + detail::num("%.4f", q.decode_s) : "NA,NA";
    s += "\n";
  }
  return s;
}

inline void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows,
                         bool timings = false) {
  write_text_atomic(path, format_report(rows, timings));
}

}  // namespace motionlab::metrics
