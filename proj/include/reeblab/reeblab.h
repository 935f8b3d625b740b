#ifndef REEBLAB_H
#define REEBLAB_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define REEB_API __attribute__((visibility("default")))
#else
#define REEB_API
#endif

/* Status codes; the non-zero values double as CLI exit codes. */
typedef enum reeb_status {
  REEB_OK = 0,
  REEB_ERR_INTERNAL = 1,
  REEB_ERR_VALIDATION = 2,
  REEB_ERR_NUMERICAL = 3,
  REEB_ERR_UNDETERMINED = 4
} reeb_status;

typedef struct reeb_context reeb_context;

REEB_API reeb_context* reeb_context_new(void);
REEB_API void reeb_context_free(reeb_context* ctx);

/* Worker threads for parallel sections; 0 lets a run config decide. */
REEB_API reeb_status reeb_set_workers(reeb_context* ctx, int workers);

/* Runs `command` (for example "orbits.lyapunov") on a JSON request. On
   return *response holds a JSON document owned by the caller (free with
   reeb_string_free) or NULL when the command raised an error; in that case
   reeb_last_error and reeb_last_witness describe it. A command may also
   return a document together with a non-zero status, as the pipeline does
   when a stage fails. */
REEB_API reeb_status reeb_call(reeb_context* ctx, const char* command, const char* request_json,
                               char** response);

REEB_API void reeb_string_free(char* s);

REEB_API const char* reeb_last_error(const reeb_context* ctx);
REEB_API const char* reeb_last_witness(const reeb_context* ctx);

/* Writes `content` to `path` through a temporary file and a rename. */
REEB_API reeb_status reeb_write_file(reeb_context* ctx, const char* path, const char* content);

REEB_API int reeb_command_count(void);
REEB_API const char* reeb_command_name(int index);
REEB_API const char* reeb_version(void);

#ifdef __cplusplus
}
#endif

#endif
