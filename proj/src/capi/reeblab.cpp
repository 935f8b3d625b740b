#include "reeblab/reeblab.h"

#include "reeb/io.hpp"
#include "reeb/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct reeb_context {
  int workers = 0;
  std::string error;
  std::string witness;
};

namespace {

char* copy_out(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

reeb_status fail(reeb_context* ctx, reeb_status code, const std::string& what, const std::string& witness) {
  ctx->error = what;
  ctx->witness = witness;
  return code;
}

}  // namespace

extern "C" {

reeb_context* reeb_context_new(void) { return new (std::nothrow) reeb_context; }

void reeb_context_free(reeb_context* ctx) { delete ctx; }

reeb_status reeb_set_workers(reeb_context* ctx, int workers) {
  if (!ctx) return REEB_ERR_VALIDATION;
  if (workers < 0) return fail(ctx, REEB_ERR_VALIDATION, "workers must be non-negative", "");
  ctx->workers = workers;
  return REEB_OK;
}

reeb_status reeb_call(reeb_context* ctx, const char* command, const char* request_json, char** response) {
  if (!ctx) return REEB_ERR_VALIDATION;
  if (response) *response = nullptr;
  ctx->error.clear();
  ctx->witness.clear();
  if (!command || !request_json || !response)
    return fail(ctx, REEB_ERR_VALIDATION, "command, request and response must be non-null", "");
  try {
    const reeb::Json req = reeb::Json::parse(request_json);
    const int workers = std::string(command) == "run" ? ctx->workers : std::max(1, ctx->workers);
    const reeb::ServiceReply reply = reeb::dispatch(command, req, workers);
    *response = copy_out(reeb::dump_json(reply.body));
    if (!*response) return fail(ctx, REEB_ERR_INTERNAL, "out of memory", "");
    if (reply.code != 0) ctx->error = "command '" + std::string(command) + "' reported a failure";
    return static_cast<reeb_status>(reply.code);
  } catch (const reeb::Json::exception& e) {
    return fail(ctx, REEB_ERR_VALIDATION, std::string("malformed JSON: ") + e.what(), "");
  } catch (const reeb::Error& e) {
    return fail(ctx, static_cast<reeb_status>(static_cast<int>(e.kind())), e.what(), e.witness());
  } catch (const std::exception& e) {
    return fail(ctx, REEB_ERR_INTERNAL, e.what(), "");
  }
}

void reeb_string_free(char* s) { std::free(s); }

const char* reeb_last_error(const reeb_context* ctx) { return ctx ? ctx->error.c_str() : ""; }

const char* reeb_last_witness(const reeb_context* ctx) { return ctx ? ctx->witness.c_str() : ""; }

reeb_status reeb_write_file(reeb_context* ctx, const char* path, const char* content) {
  if (!ctx) return REEB_ERR_VALIDATION;
  if (!path || !content) return fail(ctx, REEB_ERR_VALIDATION, "path and content must be non-null", "");
  try {
    reeb::write_file_atomic(path, content);
    return REEB_OK;
  } catch (const reeb::Error& e) {
    return fail(ctx, static_cast<reeb_status>(static_cast<int>(e.kind())), e.what(), e.witness());
  } catch (const std::exception& e) {
    return fail(ctx, REEB_ERR_INTERNAL, e.what(), "");
  }
}

int reeb_command_count(void) { return static_cast<int>(reeb::service_commands().size()); }

const char* reeb_command_name(int index) {
  const auto& names = reeb::service_commands();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<std::size_t>(index)].c_str();
}

const char* reeb_version(void) { return "0.1.0"; }

}  // extern "C"
