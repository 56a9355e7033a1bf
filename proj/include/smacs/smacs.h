/* SMACS embeddable C API: token service hosting, chain-simulator state,
 * client-side token requests, scenarios and the issuance benchmark.
 *
 * All functions returning int use smacs_status codes; on failure
 * smacs_last_error() carries a thread-local message. Strings returned
 * through char** out-parameters are heap-allocated; release them with
 * smacs_free().
 */
#ifndef SMACS_H
#define SMACS_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef SMACS_API
#define SMACS_API __attribute__((visibility("default")))
#endif

typedef enum {
    SMACS_OK = 0,
    SMACS_ERR = 1,        /* operation failed; see smacs_last_error() */
    SMACS_ERR_USAGE = 2,  /* malformed arguments or input documents */
    SMACS_ERR_DENIED = 3, /* request denied / scenario assertions failed */
} smacs_status;

typedef struct smacs_ts smacs_ts;   /* token service + HTTP front end */
typedef struct smacs_sim smacs_sim; /* chain simulator */

SMACS_API const char* smacs_version(void);
SMACS_API const char* smacs_last_error(void);
SMACS_API void smacs_free(char* p);

/* secp256k1 keypair as hex; with a non-NULL seed the key is derived
 * deterministically. */
SMACS_API int smacs_keygen(const char* seed, char** sk_hex, char** pk_hex);
/* 4-byte method selector for a canonical method name, hex. */
SMACS_API int smacs_selector(const char* method_name, char** selector_hex);

/* --- token service ----------------------------------------------------- */

/* Opens a service from a JSON config file (keys, rules/counter paths,
 * contract registry, private-sim fixtures). */
SMACS_API smacs_ts* smacs_ts_open(const char* config_path);
/* Serves on a background thread; port 0 picks a free port. */
SMACS_API int smacs_ts_start(smacs_ts* ts, int port, int* bound_port);
/* Serves on the calling thread until smacs_ts_stop() or a signal. */
SMACS_API int smacs_ts_run(smacs_ts* ts, int port);
SMACS_API void smacs_ts_stop(smacs_ts* ts);
SMACS_API void smacs_ts_close(smacs_ts* ts);

/* --- remote operations against a running service ----------------------- */

/* request_json: {"type","cAddr","sAddr","methodId"?,"args"?}; the reply JSON
 * is {"token","expiresAt","oneTime"} or {"error","reason"}. Returns
 * SMACS_ERR_DENIED on 4xx denials. */
SMACS_API int smacs_token_request(const char* ts_url, const char* request_json,
                                  char** response_json);
SMACS_API int smacs_rules_put(const char* ts_url, const char* secret,
                              const char* rules_json, char** response_json);
SMACS_API int smacs_rules_patch(const char* ts_url, const char* secret, const char* op,
                                const char* scope, const char* entry,
                                char** response_json);
SMACS_API int smacs_pubkey(const char* ts_url, char** pk_hex);

/* --- chain simulator ---------------------------------------------------- */

/* genesis_json: {"clock"?, "accounts":[{"name","pk"|"seed","balance"}],
 * "contracts":[{"label","fixture","init"?,"guard_pk"?,"bitmap_bits"?}]};
 * "@label" references resolve to addresses in declaration order. */
SMACS_API smacs_sim* smacs_sim_new(const char* genesis_json);
SMACS_API smacs_sim* smacs_sim_load(const char* path);
SMACS_API int smacs_sim_save(smacs_sim* sim, const char* path);
SMACS_API int smacs_sim_dump(smacs_sim* sim, char** json_out);
SMACS_API void smacs_sim_close(smacs_sim* sim);

/* Fetches one token per chain hop from the service, assembles the token
 * array, signs and submits the transaction. plan_json:
 * {"origin_sk","target","method","args"?,"value"?,
 *  "chain":[{"contract","type","method"?,"args"?}]}.
 * Returns SMACS_ERR_DENIED when the service refuses a token or the
 * transaction does not land with status ok; receipt_json has the detail. */
SMACS_API int smacs_client_send(smacs_sim* sim, const char* ts_url,
                                const char* plan_json, char** receipt_json);

/* --- scenario runner and benchmark -------------------------------------- */

/* SMACS_OK all assertions hold, SMACS_ERR_DENIED assertion failures,
 * SMACS_ERR_USAGE unparseable scenario. */
SMACS_API int smacs_scenario_run(const char* path, char** report_json);

/* options_json: {"batches":[...],"concurrency":n,"csv_path"?,"data_path"?};
 * csv_out receives the result table. */
SMACS_API int smacs_bench_run(const char* options_json, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* SMACS_H */
