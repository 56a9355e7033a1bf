#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace smacs::bench {

struct Options {
    std::vector<std::uint64_t> batch_sizes = {1, 10, 100, 1000, 10000, 100000};
    int concurrency = 4;
    std::string csv_path;   // optional CSV output
    std::string data_path;  // optional whitespace-column output
    std::string work_dir;   // counter/rules files; defaults to a temp dir
    bool measure_validators = true;
};

struct Row {
    std::string type;  // super | method | argument | argument_onetime
    std::uint64_t batch = 0;
    double seconds = 0;
    double requests_per_second = 0;
};

struct ValidatorLatency {
    std::string name;
    double micros = 0;
};

struct Report {
    std::vector<Row> rows;
    std::vector<ValidatorLatency> validator_latency;

    double rate(const std::string& type, std::uint64_t batch) const;
    std::string to_csv() const;
    std::string to_dat() const;
};

/// Issuance throughput of a self-hosted token service over HTTP, batch sizes
/// and token types as in the reference experiment, plus the one-time
/// argument variant. Rules are the list-based document shape; validators do
/// not run in the throughput path and are timed separately.
Report run(const Options& opts);

}  // namespace smacs::bench
