#include "rapidraid/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "rapidraid/blockstore.hpp"
#include "rapidraid/classical.hpp"
#include "rapidraid/pipeline.hpp"

namespace rapidraid {

const char* to_string(EngineKind e) {
    return e == EngineKind::classical ? "classical" : "rapidraid";
}

EngineKind engine_from_string(const std::string& s) {
    if (s == "classical") return EngineKind::classical;
    if (s == "rapidraid") return EngineKind::rapidraid;
    throw input_error("unknown engine: " + s);
}

double predict(const TimingModel& model, uint32_t n, uint32_t k,
               EngineKind engine) {
    if (engine == EngineKind::classical) {
        const uint32_t m = n - k;
        const uint32_t fan = std::max(k, m > 0 ? m - 1 : 0);
        return model.tau_block * fan + model.tau_classical;
    }
    return model.tau_block + (n - 1) * model.tau_pipe;
}

void BenchScenario::validate() const {
    if (repetitions < 1) throw input_error("scenario: repetitions >= 1");
    if (objects < 1) throw input_error("scenario: objects >= 1");
    if (objects > 1 && objects != n)
        throw input_error(
            "scenario: concurrent mode schedules one object per node (objects "
            "== n)");
    if (congested_count > n + 1)
        throw input_error("scenario: congested nodes exceed participants");
    link.validate();
    congested.validate();
    const size_t word = word_bits / 8;
    if (word == 0 || block_size % word || chunk_size % word)
        throw input_error("scenario: sizes must be word aligned");
}

std::string BenchScenario::serialize() const {
    std::ostringstream out;
    out << "name=" << name << "\n";
    out << "n=" << n << "\n";
    out << "k=" << k << "\n";
    out << "word_bits=" << word_bits << "\n";
    out << "objects=" << objects << "\n";
    out << "block_size=" << block_size << "\n";
    out << "chunk_size=" << chunk_size << "\n";
    out << "repetitions=" << repetitions << "\n";
    out << "seed=" << seed << "\n";
    out << "bandwidth=" << static_cast<uint64_t>(link.bandwidth) << "\n";
    out << "latency=" << link.base_latency << "\n";
    out << "jitter=" << link.latency_jitter << "\n";
    out << "congested_bandwidth=" << static_cast<uint64_t>(congested.bandwidth)
        << "\n";
    out << "congested_latency=" << congested.base_latency << "\n";
    out << "congested_jitter=" << congested.latency_jitter << "\n";
    out << "congested_count=" << congested_count << "\n";
    return out.str();
}

BenchScenario BenchScenario::parse(const std::string& text) {
    BenchScenario s;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw input_error("scenario: malformed line " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "name") s.name = val;
            else if (key == "n") s.n = std::stoul(val);
            else if (key == "k") s.k = std::stoul(val);
            else if (key == "word_bits") s.word_bits = std::stoul(val);
            else if (key == "objects") s.objects = std::stoul(val);
            else if (key == "block_size") s.block_size = std::stoull(val);
            else if (key == "chunk_size") s.chunk_size = std::stoull(val);
            else if (key == "repetitions") s.repetitions = std::stoul(val);
            else if (key == "seed") s.seed = std::stoull(val);
            else if (key == "bandwidth") s.link.bandwidth = std::stod(val);
            else if (key == "latency") s.link.base_latency = std::stod(val);
            else if (key == "jitter") s.link.latency_jitter = std::stod(val);
            else if (key == "congested_bandwidth") s.congested.bandwidth = std::stod(val);
            else if (key == "congested_latency") s.congested.base_latency = std::stod(val);
            else if (key == "congested_jitter") s.congested.latency_jitter = std::stod(val);
            else if (key == "congested_count") s.congested_count = std::stoul(val);
            else throw input_error("scenario: unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw input_error("scenario: bad value for " + key + ": " + val);
        }
    }
    s.validate();
    return s;
}

double percentile_nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) throw input_error("percentile of empty sample");
    std::sort(values.begin(), values.end());
    const size_t rank = static_cast<size_t>(
        std::ceil(p / 100.0 * static_cast<double>(values.size())));
    return values[std::max<size_t>(rank, 1) - 1];
}

BenchSummary summarize(const std::vector<double>& seconds) {
    BenchSummary s;
    s.median = percentile_nearest_rank(seconds, 50);
    s.p25 = percentile_nearest_rank(seconds, 25);
    s.p75 = percentile_nearest_rank(seconds, 75);
    s.min = *std::min_element(seconds.begin(), seconds.end());
    s.max = *std::max_element(seconds.begin(), seconds.end());
    return s;
}

namespace {

std::string node_name(uint32_t i) { return "node" + std::to_string(i + 1); }
std::string coord_name(uint32_t j) { return "coord" + std::to_string(j + 1); }

/// Pipeline position -> storage node for object j (rotation spreads the
/// chains over the cluster in concurrent runs).
uint32_t rotated(uint32_t n, uint32_t object, uint32_t position) {
    return (object + position) % n;
}

}  // namespace

std::vector<std::string> congestion_order(const BenchScenario& s,
                                          EngineKind engine) {
    std::vector<std::string> order;
    if (engine == EngineKind::classical && s.objects == 1)
        order.push_back(coord_name(0));
    for (uint32_t i = 0; i < s.n; i += 2) order.push_back(node_name(i));
    for (uint32_t i = 1; i < s.n; i += 2) order.push_back(node_name(i));
    return order;
}

std::vector<BenchRecord> run_scenario(const BenchScenario& s,
                                      EngineKind engine) {
    s.validate();
    std::vector<BenchRecord> records;

    for (uint32_t rep = 0; rep < s.repetitions; ++rep) {
        const uint64_t rep_seed = s.seed + rep;
        SimNetwork net(rep_seed, s.link);
        for (uint32_t i = 0; i < s.n; ++i) net.register_node(node_name(i));
        if (engine == EngineKind::classical && s.objects == 1)
            net.register_node(coord_name(0));

        const auto order = congestion_order(s, engine);
        for (uint32_t c = 0; c < s.congested_count && c < order.size(); ++c)
            net.shape(net.lookup(order[c]), s.congested);

        // coded blocks are timing sinks; source payloads stay real
        MemStore store(true);
        std::shared_ptr<const CodeSpec> spec;
        if (engine == EngineKind::rapidraid) {
            spec = std::make_shared<const CodeSpec>(
                CodeSpec::make_rapidraid(s.n, s.k, s.word_bits, s.seed));
        } else {
            spec = std::make_shared<const CodeSpec>(
                CodeSpec::make_cauchy(s.n, s.k, s.word_bits));
        }
        const auto digest = spec->digest();

        // stage the objects: random blocks, replicas per placement
        std::vector<ObjectId> objects;
        for (uint32_t j = 0; j < s.objects; ++j) {
            const ObjectId oid = ObjectId::from_seed(rep_seed, j);
            objects.push_back(oid);
            std::mt19937_64 rng(rep_seed * 1000003 + j);
            for (uint32_t b = 0; b < s.k; ++b) {
                std::vector<uint8_t> bytes(s.block_size);
                for (auto& byte : bytes)
                    byte = static_cast<uint8_t>(rng());
                Payload payload = make_payload(std::move(bytes));
                BlockHeader h;
                h.object = oid;
                h.index = b;
                h.role = BlockRole::source;
                h.word_bits = static_cast<uint8_t>(s.word_bits);
                h.reduction_polynomial =
                    GaloisField::default_polynomial(s.word_bits);
                h.code_digest = digest;
                if (engine == EngineKind::rapidraid) {
                    // replica 1 at chain position b, replica 2 at n-k+b
                    store.put_block_shared(
                        node_name(rotated(s.n, j, b)),
                        BlockKey{oid, BlockRole::source, 1, b}, h, payload);
                    store.put_block_shared(
                        node_name(rotated(s.n, j, s.n - s.k + b)),
                        BlockKey{oid, BlockRole::source, 2, b}, h, payload);
                } else {
                    // sources sit one hop past the coordinator slot
                    const uint32_t holder =
                        s.objects == 1 ? rotated(s.n, j, b)
                                       : rotated(s.n, j, 1 + b);
                    store.put_block_shared(node_name(holder),
                                           BlockKey{oid, BlockRole::source, 1, b},
                                           h, payload);
                }
            }
        }

        std::vector<std::shared_ptr<EncodeOutcome>> outcomes;
        for (uint32_t j = 0; j < s.objects; ++j) {
            if (engine == EngineKind::rapidraid) {
                PipelineJob job;
                job.spec = spec;
                for (uint32_t i = 0; i < s.n; ++i)
                    job.node_names.push_back(node_name(rotated(s.n, j, i)));
                job.object = objects[j];
                job.block_size = s.block_size;
                job.chunk_size = s.chunk_size;
                outcomes.push_back(start_pipeline_sim(net, store, job));
            } else {
                ClassicalJob job;
                job.spec = spec;
                job.object = objects[j];
                job.block_size = s.block_size;
                job.chunk_size = s.chunk_size;
                if (s.objects == 1) {
                    job.coordinator = coord_name(0);
                    for (uint32_t b = 0; b < s.k; ++b)
                        job.source_nodes.push_back(node_name(rotated(s.n, j, b)));
                    for (uint32_t r = 0; r < s.n - s.k; ++r)
                        job.sink_nodes.push_back(
                            node_name(rotated(s.n, j, s.k + r)));
                } else {
                    // coordinator on node j holds no source of object j;
                    // the last sink doubles as a source holder
                    job.coordinator = node_name(rotated(s.n, j, 0));
                    for (uint32_t b = 0; b < s.k; ++b)
                        job.source_nodes.push_back(
                            node_name(rotated(s.n, j, 1 + b)));
                    for (uint32_t r = 0; r < s.n - s.k; ++r)
                        job.sink_nodes.push_back(
                            node_name(rotated(s.n, j, s.n - (s.n - s.k) + r)));
                }
                outcomes.push_back(start_classical_sim(net, store, job));
            }
        }

        net.run();

        for (uint32_t j = 0; j < s.objects; ++j) {
            if (!outcomes[j]->success)
                throw std::runtime_error("bench: encode failed: " +
                                         outcomes[j]->error);
            records.push_back(BenchRecord{s.name, engine, j,
                                          outcomes[j]->seconds(),
                                          s.congested_count, rep_seed});
        }
    }
    return records;
}

std::vector<BenchRecord> congestion_sweep(const BenchScenario& s,
                                          EngineKind engine,
                                          uint32_t max_congested) {
    std::vector<BenchRecord> all;
    for (uint32_t c = 0; c <= max_congested; ++c) {
        BenchScenario step = s;
        step.congested_count = c;
        auto records = run_scenario(step, engine);
        all.insert(all.end(), records.begin(), records.end());
    }
    return all;
}

TimingModel calibrate_model(const BenchScenario& s) {
    TimingModel m;
    m.tau_block =
        static_cast<double>(s.block_size) / s.link.bandwidth + s.link.base_latency;
    m.tau_pipe =
        static_cast<double>(s.chunk_size) / s.link.bandwidth + s.link.base_latency;
    m.tau_classical = 0;
    return m;
}

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
    out << "# rapidraid-bench-csv/1\n";
    out << "scenario,engine,object,seconds,congested_count,seed\n";
    for (const auto& r : records) {
        out << r.scenario << "," << to_string(r.engine) << "," << r.object << ","
            << r.seconds << "," << r.congested_count << "," << r.seed << "\n";
    }
}

double linear_fit_r2(const std::vector<double>& xs,
                     const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw input_error("linear fit needs matching samples");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (syy == 0) return 1.0;  // flat data fits perfectly
    if (sxx == 0) return 0.0;
    return (sxy * sxy) / (sxx * syy);
}

}  // namespace rapidraid
