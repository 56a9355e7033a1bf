#include "bench.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "http_api.hpp"
#include "token_service.hpp"

namespace smacs::bench {

namespace {

using Clock = std::chrono::steady_clock;

struct Harness {
    crypto::KeyPair ts_key = crypto::keypair_from_seed("bench:ts");
    crypto::KeyPair client_key = crypto::keypair_from_seed("bench:client");
    Address contract;
    Address sender;
    std::unique_ptr<service::TokenService> ts;
    std::unique_ptr<service::HttpFrontEnd> front;

    explicit Harness(const std::string& work_dir) {
        bytes cd = crypto::sha256(bytes{'b', 'e', 'n', 'c', 'h', ':', 'c'});
        contract = Address::from_bytes(std::span(cd).first(20));
        bytes sd = crypto::sha256(client_key.pk);
        sender = Address::from_bytes(std::span(sd).first(20));

        service::ServiceConfig cfg;
        cfg.key = ts_key;
        cfg.owner_secret = "bench-owner";
        cfg.counter_path = work_dir + "/bench_counter.dat";
        service::ContractPolicy policy;
        policy.methods["transfer"] = {false};
        policy.methods["transferOnce"] = {true};
        policy.expiry_s = 3600;
        cfg.contracts[contract] = policy;
        ts = std::make_unique<service::TokenService>(std::move(cfg));

        // List-based rules: sender whitelist, per-method blacklists, one
        // whitelisted argument, as in the reference rule document.
        std::string rules = R"({
          "sender": {"whitelist": [")" + sender.hex() + R"("]},
          "method": {
            "transfer": {"blacklist": ["0xba7f00000000000000000000000000000000beef"]},
            "transferOnce": {"blacklist": ["0xba7f00000000000000000000000000000000beef"]}
          },
          "argument": {
            "argA": {"whitelist": ["0x3540000000000000000000000000000000000000"]}
          }
        })";
        ts->put_rules(rules);

        front = std::make_unique<service::HttpFrontEnd>(*ts);
        front->start("127.0.0.1", 0);
    }

    std::string request_body(const std::string& type) const {
        TokenRequest req;
        req.contract = contract;
        req.sender = sender;
        if (type == "super") {
            req.type = TokenType::Super;
        } else if (type == "method") {
            req.type = TokenType::Method;
            req.method = MethodId::of("transfer");
        } else {
            req.type = TokenType::Argument;
            req.method = MethodId::of(type == "argument_onetime" ? "transferOnce" : "transfer");
            req.args = {{"argA", "0x3540000000000000000000000000000000000000"}};
        }
        return service::request_to_json(req);
    }
};

double measure_batch(const Harness& h, const std::string& body, std::uint64_t batch,
                     int concurrency) {
    int workers = batch < static_cast<std::uint64_t>(concurrency)
                      ? 1
                      : concurrency;
    std::atomic<std::uint64_t> next{0};
    std::atomic<std::uint64_t> failures{0};
    std::vector<std::thread> threads;

    auto t0 = Clock::now();
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            httplib::Client cli("127.0.0.1", h.front->port());
            cli.set_tcp_nodelay(true);
            cli.set_keep_alive(true);
            while (next.fetch_add(1) < batch) {
                auto res = cli.Post("/v1/token", body, "application/json");
                if (!res || res->status != 200) failures.fetch_add(1);
            }
        });
    }
    for (std::thread& t : threads) t.join();
    double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (failures.load() > 0)
        throw Error("BenchFailure", std::to_string(failures.load()) + " requests failed");
    return seconds;
}

void measure_validator_latency(Report& report) {
    auto snapshot = std::make_shared<sim::Simulator>();
    Address h1 = snapshot->register_contract("counter", {}, std::nullopt, "H1");
    Address h2 = snapshot->register_contract("counter", {}, std::nullopt, "H2");
    Address h3 = snapshot->register_contract("counter", {}, std::nullopt, "H3");
    sim::BankAttackerAddrs ba = sim::bank_attacker_fixture(*snapshot);

    validators::SimulatedCall call;
    call.caller = ba.attacker;
    call.contract = h1;
    call.method = MethodId::of("increment");
    call.args = {{"n", "5"}};

    // Warm once, then average a few runs of each check.
    constexpr int kRuns = 20;
    (void)validators::nversion_uniform(call, {h1, h2, h3}, *snapshot);
    double nversion_total = 0;
    for (int i = 0; i < kRuns; ++i)
        nversion_total +=
            validators::nversion_uniform(call, {h1, h2, h3}, *snapshot).elapsed_us;

    validators::SimulatedCall ecf_call;
    ecf_call.caller = ba.attacker;
    ecf_call.contract = ba.bank;
    ecf_call.method = MethodId::of("withdraw");
    (void)validators::ecf_check(ecf_call, *snapshot);
    double ecf_total = 0;
    for (int i = 0; i < kRuns; ++i)
        ecf_total += validators::ecf_check(ecf_call, *snapshot).elapsed_us;

    report.validator_latency.push_back({"nversion", nversion_total / kRuns});
    report.validator_latency.push_back({"ecf", ecf_total / kRuns});
}

}  // namespace

double Report::rate(const std::string& type, std::uint64_t batch) const {
    for (const Row& r : rows)
        if (r.type == type && r.batch == batch) return r.requests_per_second;
    return 0;
}

std::string Report::to_csv() const {
    std::ostringstream out;
    out << "type,batch,seconds,requests_per_second\n";
    for (const Row& r : rows) {
        char line[160];
        std::snprintf(line, sizeof line, "%s,%llu,%.6f,%.1f\n", r.type.c_str(),
                      static_cast<unsigned long long>(r.batch), r.seconds,
                      r.requests_per_second);
        out << line;
    }
    for (const ValidatorLatency& v : validator_latency) {
        char line[120];
        std::snprintf(line, sizeof line, "validator_%s,1,%.6f,%.1f\n", v.name.c_str(),
                      v.micros / 1e6, v.micros > 0 ? 1e6 / v.micros : 0.0);
        out << line;
    }
    return out.str();
}

std::string Report::to_dat() const {
    // One column block per type, batch then req/s, gnuplot-style.
    std::ostringstream out;
    out << "# batch";
    std::vector<std::string> types;
    for (const Row& r : rows)
        if (std::find(types.begin(), types.end(), r.type) == types.end())
            types.push_back(r.type);
    for (const std::string& t : types) out << ' ' << t;
    out << '\n';
    std::vector<std::uint64_t> batches;
    for (const Row& r : rows)
        if (std::find(batches.begin(), batches.end(), r.batch) == batches.end())
            batches.push_back(r.batch);
    for (std::uint64_t b : batches) {
        out << b;
        for (const std::string& t : types) {
            char cell[32];
            std::snprintf(cell, sizeof cell, " %.1f", rate(t, b));
            out << cell;
        }
        out << '\n';
    }
    return out.str();
}

Report run(const Options& opts) {
    std::string work_dir = opts.work_dir;
    if (work_dir.empty()) {
        work_dir = (std::filesystem::temp_directory_path() / "smacs-bench").string();
        std::filesystem::create_directories(work_dir);
    }
    Harness h(work_dir);

    Report report;
    const std::vector<std::string> types = {"super", "method", "argument",
                                            "argument_onetime"};
    // Warm connections, server workers and per-thread signing state before
    // taking any measurement.
    for (const std::string& type : types)
        measure_batch(h, h.request_body(type), 64, opts.concurrency);

    for (const std::string& type : types) {
        std::string body = h.request_body(type);
        for (std::uint64_t batch : opts.batch_sizes) {
            // Small batches are noisy; take the median of three runs.
            std::vector<double> samples;
            int runs = batch <= 100 ? 3 : 1;
            for (int i = 0; i < runs; ++i)
                samples.push_back(measure_batch(h, body, batch, opts.concurrency));
            std::sort(samples.begin(), samples.end());
            double seconds = samples[samples.size() / 2];
            report.rows.push_back(
                {type, batch, seconds, static_cast<double>(batch) / seconds});
        }
    }

    if (opts.measure_validators) measure_validator_latency(report);

    if (!opts.csv_path.empty()) {
        std::ofstream out(opts.csv_path);
        out << report.to_csv();
    }
    if (!opts.data_path.empty()) {
        std::ofstream out(opts.data_path);
        out << report.to_dat();
    }
    h.front->stop();
    return report;
}

}  // namespace smacs::bench
