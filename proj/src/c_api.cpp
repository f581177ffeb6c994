#include "jdsr/jdsr.h"

#include <cstring>
#include <new>
#include <string>

#include "jdsr/commands.hpp"
#include "jdsr/error.hpp"
#include "jdsr/parallel.hpp"

struct jdsr_config {
  jdsr::RunConfig value;
};

namespace {

thread_local std::string g_last_error;

jdsr_status to_status(jdsr::ErrorCode code) {
  switch (code) {
    case jdsr::ErrorCode::kInvalidArgument: return JDSR_ERR_INVALID_ARGUMENT;
    case jdsr::ErrorCode::kDimensionMismatch: return JDSR_ERR_DIMENSION_MISMATCH;
    case jdsr::ErrorCode::kBehindCamera: return JDSR_ERR_BEHIND_CAMERA;
    case jdsr::ErrorCode::kNearPiRotation: return JDSR_ERR_NEAR_PI_ROTATION;
    case jdsr::ErrorCode::kIo: return JDSR_ERR_IO;
    case jdsr::ErrorCode::kParse: return JDSR_ERR_PARSE;
    case jdsr::ErrorCode::kNumerical: return JDSR_ERR_NUMERICAL;
  }
  return JDSR_ERR_INTERNAL;
}

template <typename F>
jdsr_status guarded(F&& body) {
  try {
    return body();
  } catch (const jdsr::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return JDSR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return JDSR_ERR_INTERNAL;
  }
}

jdsr_status null_argument(const char* name) {
  g_last_error = std::string("null argument: ") + name;
  return JDSR_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* jdsr_version(void) { return "0.1.0"; }

const char* jdsr_last_error(void) { return g_last_error.c_str(); }

const char* jdsr_status_name(jdsr_status status) {
  switch (status) {
    case JDSR_OK: return "ok";
    case JDSR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case JDSR_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case JDSR_ERR_BEHIND_CAMERA: return "behind camera";
    case JDSR_ERR_NEAR_PI_ROTATION: return "near-pi rotation";
    case JDSR_ERR_IO: return "i/o error";
    case JDSR_ERR_PARSE: return "parse error";
    case JDSR_ERR_NUMERICAL: return "numerical failure";
    case JDSR_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void jdsr_set_threads(int n) { jdsr::set_thread_count(n); }

jdsr_status jdsr_config_default(jdsr_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new jdsr_config{};
    return JDSR_OK;
  });
}

jdsr_status jdsr_config_load(const char* path, jdsr_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    jdsr::RunConfig c = jdsr::read_config(path);
    c.validate();
    *out = new jdsr_config{std::move(c)};
    return JDSR_OK;
  });
}

jdsr_status jdsr_config_parse(const char* text, jdsr_config** out) {
  if (!text) return null_argument("text");
  if (!out) return null_argument("out");
  return guarded([&] {
    jdsr::RunConfig c = jdsr::parse_config(text);
    c.validate();
    *out = new jdsr_config{std::move(c)};
    return JDSR_OK;
  });
}

jdsr_status jdsr_config_set(jdsr_config* config, const char* key, const char* value) {
  if (!config) return null_argument("config");
  if (!key) return null_argument("key");
  if (!value) return null_argument("value");
  return guarded([&] {
    const std::string text = config->value.to_text() + key + " = " + value + "\n";
    jdsr::RunConfig next = jdsr::parse_config(text, "<override>");
    next.validate();
    config->value = std::move(next);
    return JDSR_OK;
  });
}

jdsr_status jdsr_config_text(const jdsr_config* config, char* buf, size_t capacity, size_t* needed) {
  if (!config) return null_argument("config");
  return guarded([&] {
    const std::string text = config->value.to_text();
    if (needed) *needed = text.size() + 1;
    if (buf && capacity > text.size()) std::memcpy(buf, text.c_str(), text.size() + 1);
    else if (buf) {
      g_last_error = "buffer too small for config text";
      return JDSR_ERR_INVALID_ARGUMENT;
    }
    return JDSR_OK;
  });
}

void jdsr_config_free(jdsr_config* config) { delete config; }

jdsr_status jdsr_synth(const jdsr_config* config, const char* out_dir) {
  if (!config) return null_argument("config");
  if (!out_dir) return null_argument("out_dir");
  return guarded([&] {
    jdsr::cmd_synth(config->value, out_dir);
    return JDSR_OK;
  });
}

jdsr_status jdsr_run(const jdsr_config* config, const char* in_dir, const char* out_dir,
                     jdsr_run_summary* summary) {
  if (!config) return null_argument("config");
  if (!in_dir) return null_argument("in_dir");
  if (!out_dir) return null_argument("out_dir");
  return guarded([&] {
    const jdsr::RunSummary s = jdsr::cmd_run(config->value, in_dir, out_dir);
    if (summary)
      *summary = {s.frames, s.iterations, static_cast<int>(s.flagged_frames.size()), s.initial_energy,
                  s.final_energy};
    if (!s.flagged_frames.empty()) {
      g_last_error = "solver flagged " + std::to_string(s.flagged_frames.size()) + " frame(s); see flags.txt";
      return JDSR_ERR_NUMERICAL;
    }
    return JDSR_OK;
  });
}

jdsr_status jdsr_eval(const char* const* est_dirs, size_t count, const char* gt_dir,
                      const char* report_path, jdsr_eval_summary* summary) {
  if (!est_dirs || count == 0) return null_argument("est_dirs");
  if (!gt_dir) return null_argument("gt_dir");
  if (!report_path) return null_argument("report_path");
  return guarded([&] {
    std::vector<std::filesystem::path> dirs;
    for (size_t i = 0; i < count; ++i) {
      if (!est_dirs[i]) return null_argument("est_dirs[i]");
      dirs.emplace_back(est_dirs[i]);
    }
    const auto reports = jdsr::cmd_eval(dirs, gt_dir, report_path);
    if (summary) {
      const auto& r = reports.front();
      *summary = {r.mean_image_psnr, r.mean_depth_psnr, r.mean_depth_rel, r.ate};
    }
    return JDSR_OK;
  });
}

}  // extern "C"
