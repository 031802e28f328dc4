#include "rapidraid/cli_commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rapidraid/classical.hpp"
#include "rapidraid/decoder.hpp"
#include "rapidraid/pipeline.hpp"

namespace rapidraid {

namespace {

std::string node_name(uint32_t i) { return "node" + std::to_string(i + 1); }

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open file: " + path.string());
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::filesystem::path& path,
                std::span<const uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot open output file: " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::filesystem::path codespec_path(const std::filesystem::path& root,
                                    const ObjectId& object) {
    return root / "manifests" / (object.to_hex() + ".codespec");
}

BlockHeader source_header(const CodeSpec& spec, ObjectId object, uint32_t index) {
    BlockHeader h;
    h.object = object;
    h.index = index;
    h.role = BlockRole::source;
    h.word_bits = static_cast<uint8_t>(spec.params.field->word_bits());
    h.reduction_polynomial = spec.params.field->reduction_polynomial();
    h.code_digest = spec.digest();
    return h;
}

}  // namespace

ObjectId cli_encode(const EncodeOptions& opt, std::ostream& out) {
    const std::vector<uint8_t> data = read_file(opt.file);
    if (data.empty())
        throw input_error("empty file: nothing to split into k blocks");

    std::shared_ptr<const CodeSpec> spec;
    if (opt.engine == EngineKind::rapidraid)
        spec = std::make_shared<const CodeSpec>(
            CodeSpec::make_rapidraid(opt.n, opt.k, opt.word_bits, opt.seed));
    else
        spec = std::make_shared<const CodeSpec>(
            CodeSpec::make_cauchy(opt.n, opt.k, opt.word_bits));

    const size_t word = opt.word_bits / 8;
    uint64_t block_size = (data.size() + opt.k - 1) / opt.k;
    block_size = (block_size + word - 1) / word * word;

    const ObjectId object = ObjectId::from_seed(opt.seed, data.size());
    FileStore store(opt.store_root);

    // stage both replicas per the placement
    const PlacementMap map = placement(spec->params);
    std::vector<uint8_t> padded(static_cast<size_t>(block_size) * opt.k, 0);
    std::copy(data.begin(), data.end(), padded.begin());

    ObjectManifest manifest;
    manifest.object = object;
    manifest.n = opt.n;
    manifest.k = opt.k;
    manifest.block_size = block_size;
    manifest.original_length = data.size();
    manifest.state = ArchivalState::replicated;
    manifest.code_digest = spec->digest();
    manifest.replica1_nodes.resize(opt.k);
    manifest.replica2_nodes.resize(opt.k);
    manifest.coded_nodes.resize(opt.n);

    for (uint32_t j = 0; j < opt.k; ++j) {
        const std::span<const uint8_t> block(
            padded.data() + static_cast<size_t>(j) * block_size, block_size);
        const std::string r1 = node_name(j);
        const std::string r2 = node_name(opt.n - opt.k + j);
        store.put_block(r1, BlockKey{object, BlockRole::source, 1, j},
                        source_header(*spec, object, j), block);
        store.put_block(r2, BlockKey{object, BlockRole::source, 2, j},
                        source_header(*spec, object, j), block);
        manifest.replica1_nodes[j] = r1;
        manifest.replica2_nodes[j] = r2;
    }
    for (uint32_t i = 0; i < opt.n; ++i) manifest.coded_nodes[i] = node_name(i);
    store.put_manifest(manifest);

    {
        std::ofstream spec_file(codespec_path(opt.store_root, object),
                                std::ios::trunc);
        spec_file << spec->serialize();
    }

    manifest = transition(store, manifest, ArchivalState::encoding);

    EncodeOutcome outcome;
    SimNetwork net(opt.seed, LinkProfile{125'000'000.0, 0.0, 0.0});
    uint64_t payload_moved = 0;
    if (opt.engine == EngineKind::rapidraid) {
        PipelineJob job;
        job.spec = spec;
        for (uint32_t i = 0; i < opt.n; ++i)
            job.node_names.push_back(node_name(i));
        job.object = object;
        job.block_size = block_size;
        job.chunk_size = opt.chunk_size;
        if (opt.transport == "socket") {
            outcome = run_pipeline_socket(store, job);
        } else {
            for (uint32_t i = 0; i < opt.n; ++i) net.register_node(node_name(i));
            outcome = run_pipeline_sim(net, store, job);
            payload_moved = net.delivered(StreamRole::forward_x).payload_bytes;
        }
    } else {
        ClassicalJob job;
        job.spec = spec;
        job.object = object;
        job.block_size = block_size;
        job.chunk_size = opt.chunk_size;
        job.colocate = opt.colocate;
        for (uint32_t j = 0; j < opt.k; ++j)
            job.source_nodes.push_back(node_name(j));
        for (uint32_t r = 0; r < opt.n - opt.k; ++r)
            job.sink_nodes.push_back(node_name(opt.k + r));
        job.coordinator = opt.colocate ? job.source_nodes[0] : "coord";
        if (opt.transport == "socket") {
            outcome = run_classical_socket(store, job);
        } else {
            for (uint32_t i = 0; i < opt.n; ++i) net.register_node(node_name(i));
            if (!opt.colocate) net.register_node("coord");
            outcome = run_classical_sim(net, store, job);
            payload_moved = net.delivered(StreamRole::source_pull).payload_bytes +
                            net.delivered(StreamRole::parity_push).payload_bytes;
        }
    }

    if (!outcome.success)
        throw std::runtime_error("encode failed: " + outcome.error +
                                 " (replicas intact)");

    manifest = transition(store, manifest, ArchivalState::archived);

    out << "object " << object.to_hex() << "\n";
    out << "engine " << to_string(opt.engine) << " (" << opt.n << ","
        << opt.k << ") over GF(2^" << opt.word_bits << ")\n";
    out << "block_size " << block_size << " bytes, original " << data.size()
        << " bytes\n";
    if (opt.transport == "sim") {
        out << "network payload " << payload_moved << " bytes\n";
        out << "simulated encode time " << outcome.seconds() << " s\n";
    } else {
        out << "wall-clock encode time " << outcome.seconds() << " s\n";
    }
    out << "state " << to_string(manifest.state) << "; storage "
        << (static_cast<uint64_t>(opt.n) + opt.k) * block_size
        << " bytes (n coded + retained replica)\n";
    return object;
}

void cli_decode(const DecodeOptions& opt, std::ostream& out) {
    FileStore store(opt.store_root);
    const ObjectId object = ObjectId::from_hex(opt.object_hex);
    const ObjectManifest manifest = store.get_manifest(object);

    std::ifstream spec_in(codespec_path(opt.store_root, object));
    if (!spec_in)
        throw input_error("code spec missing for object " + opt.object_hex);
    std::stringstream buf;
    buf << spec_in.rdbuf();
    const CodeSpec spec = CodeSpec::parse(buf.str());
    const Matrix gen = spec.generator();
    const GaloisField& gf = *spec.params.field;

    std::vector<uint32_t> available;
    if (!opt.blocks.empty()) {
        for (uint32_t one_based : opt.blocks) {
            if (one_based < 1 || one_based > manifest.n)
                throw input_error("block index out of range: " +
                                  std::to_string(one_based));
            available.push_back(one_based - 1);
        }
    } else {
        for (uint32_t i = 0; i < manifest.n; ++i) {
            const BlockKey key{object, BlockRole::coded, 0, i};
            if (store.block_exists(manifest.coded_nodes[i], key))
                available.push_back(i);
        }
    }

    const std::vector<uint32_t> chosen =
        select_decode_subset(gf, gen, available);
    std::vector<Block> blocks;
    std::vector<std::span<const uint8_t>> payloads;
    for (uint32_t idx : chosen)
        blocks.push_back(store.get_block(manifest.coded_nodes[idx],
                                         BlockKey{object, BlockRole::coded, 0, idx}));
    for (const auto& b : blocks) payloads.emplace_back(b.payload);

    DecodeSet set{chosen, gen.select_rows(chosen), payloads};
    const auto recovered = decode(gf, set, opt.chunk_size);

    std::vector<uint8_t> assembled;
    assembled.reserve(manifest.block_size * manifest.k);
    for (const auto& block : recovered)
        assembled.insert(assembled.end(), block.begin(), block.end());
    assembled.resize(manifest.original_length);
    write_file(opt.output, assembled);

    out << "decoded from blocks {";
    for (size_t i = 0; i < chosen.size(); ++i)
        out << (i ? "," : "") << (chosen[i] + 1);
    out << "} -> " << opt.output.string() << " (" << assembled.size()
        << " bytes)\n";
}

DependencyReport cli_analyze(const AnalyzeOptions& opt, std::ostream& out) {
    const DependencyReport report =
        classify_dependencies(opt.n, opt.k, opt.trials, opt.seed);
    out << "(" << opt.n << "," << opt.k << ") census over "
        << report.total_subsets << " " << opt.k << "-subsets, "
        << report.trials << " random assignments\n";
    out << report.natural_count() << " dependent subset"
        << (report.natural_count() == 1 ? "" : "s");
    if (!report.natural.empty() && report.natural.size() <= 32) {
        out << ":";
        for (uint32_t mask : report.natural) out << " " << format_subset(mask);
    }
    out << "\n";
    out << std::fixed << std::setprecision(4) << report.percent_independent()
        << "% of subsets independent; MDS: " << (report.mds() ? "yes" : "no")
        << "\n";
    if (!report.accidental_witness.empty())
        out << report.accidental_witness.size()
            << " accidental witnesses (rank-deficient in some assignments)\n";

    if (opt.csv_out) {
        std::ofstream csv(*opt.csv_out, std::ios::trunc);
        csv << "# rapidraid-analyze-csv/1\n";
        csv << "n,k,total_subsets,natural_count,percent_independent\n";
        csv << opt.n << "," << opt.k << "," << report.total_subsets << ","
            << report.natural_count() << "," << std::setprecision(6)
            << report.percent_independent() << "\n";
        csv << "subset,classification\n";
        for (uint32_t mask : report.natural)
            csv << format_subset(mask) << ",natural\n";
        for (uint32_t mask : report.accidental_witness)
            csv << format_subset(mask) << ",accidental-witness\n";
    }
    return report;
}

bool cli_search_coeffs(const SearchOptions& opt, std::ostream& out) {
    const DependencyReport census =
        classify_dependencies(opt.n, opt.k, opt.trials, opt.seed);
    const auto field = make_field(opt.word_bits);
    const SearchResult result = search_coefficients(
        opt.n, opt.k, *field, census, opt.budget, opt.seed);

    if (!result.coefficients) {
        out << "no dependency-free coefficient set in " << opt.budget
            << " attempts over GF(2^" << opt.word_bits
            << "); best attempt left " << result.best_accidental_count
            << " accidental dependencies\n";
        return false;
    }
    out << "found dependency-free coefficients after " << result.attempts_used
        << " attempt" << (result.attempts_used == 1 ? "" : "s") << " over GF(2^"
        << opt.word_bits << ")\n";
    if (opt.spec_out && (opt.word_bits == 8 || opt.word_bits == 16)) {
        const CodeSpec spec = CodeSpec::make_rapidraid(
            opt.n, opt.k, opt.word_bits, *result.coefficients);
        std::ofstream f(*opt.spec_out, std::ios::trunc);
        f << spec.serialize();
        out << "code spec written to " << opt.spec_out->string() << "\n";
    }
    return true;
}

void cli_resilience(const ResilienceOptions& opt, std::ostream& out) {
    std::vector<ResilienceResult> results;
    std::string label;
    if (opt.scheme == "3replica") {
        label = "3-replica system";
        for (double p : opt.probabilities)
            results.push_back(replication_resilience(3, p));
    } else if (opt.scheme == "classical") {
        label = "(" + std::to_string(opt.n) + "," + std::to_string(opt.k) +
                ") classical EC";
        for (double p : opt.probabilities)
            results.push_back(mds_resilience(opt.n, opt.k, p));
    } else if (opt.scheme == "rapidraid") {
        label = "(" + std::to_string(opt.n) + "," + std::to_string(opt.k) +
                ") rapidraid";
        const DependencyReport census =
            classify_dependencies(opt.n, opt.k, opt.trials, opt.seed);
        for (double p : opt.probabilities)
            results.push_back(static_resilience(census, p));
    } else {
        throw input_error("unknown scheme: " + opt.scheme);
    }

    out << label << "\n";
    for (const auto& r : results) {
        out << "  p=" << r.p << "  loss=" << std::scientific
            << std::setprecision(4) << r.loss_probability << std::defaultfloat
            << "  nines=" << r.nines << "\n";
    }
}

void cli_verify_conjecture(const ConjectureOptions& opt, std::ostream& out) {
    if (opt.n_max > 16)
        throw input_error(
            "n-max above 16 is intractable for the exhaustive census");
    std::vector<uint32_t> ns;
    for (uint32_t n = 4; n <= opt.n_max; ++n) ns.push_back(n);
    const auto rows = verify_conjecture(ns, opt.trials, opt.seed);
    out << "n,k,dependent_subsets,mds,matches_k>=n-3\n";
    bool all_match = true;
    for (const auto& row : rows) {
        const bool expect = row.k >= row.n - 3;
        const bool match = row.mds == expect;
        all_match = all_match && match;
        out << row.n << "," << row.k << "," << row.dependent_count << ","
            << (row.mds ? "yes" : "no") << "," << (match ? "yes" : "NO") << "\n";
    }
    out << (all_match ? "frontier matches: MDS exactly when k >= n-3\n"
                      : "frontier mismatch found\n");
}

void cli_bench(const BenchOptions& opt, std::ostream& out) {
    std::ifstream in(opt.scenario_file);
    if (!in)
        throw input_error("cannot open scenario: " +
                          opt.scenario_file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const BenchScenario scenario = BenchScenario::parse(buf.str());

    std::vector<EngineKind> engines;
    if (opt.engine == "both")
        engines = {EngineKind::classical, EngineKind::rapidraid};
    else
        engines = {engine_from_string(opt.engine)};

    std::vector<BenchRecord> all;
    for (EngineKind engine : engines) {
        std::vector<BenchRecord> records;
        if (opt.sweep_max)
            records = congestion_sweep(scenario, engine, *opt.sweep_max);
        else
            records = run_scenario(scenario, engine);

        std::vector<double> seconds;
        for (const auto& r : records) seconds.push_back(r.seconds);
        const BenchSummary s = summarize(seconds);
        out << to_string(engine) << ": median=" << s.median << " p25=" << s.p25
            << " p75=" << s.p75 << " min=" << s.min << " max=" << s.max
            << " (" << records.size() << " samples)\n";
        all.insert(all.end(), records.begin(), records.end());
    }

    if (!opt.csv_out.empty()) {
        std::ofstream csv(opt.csv_out, std::ios::trunc);
        write_csv(csv, all);
        out << "csv written to " << opt.csv_out.string() << "\n";
    }
}

void cli_store_verify(const StoreOptions& opt, std::ostream& out) {
    FileStore store(opt.store_root);
    const ObjectId object = ObjectId::from_hex(opt.object_hex);
    const ObjectManifest manifest = store.get_manifest(object);
    uint32_t coded_ok = 0, source_ok = 0;
    for (uint32_t i = 0; i < manifest.n; ++i) {
        const BlockKey key{object, BlockRole::coded, 0, i};
        if (!store.block_exists(manifest.coded_nodes[i], key)) continue;
        store.get_block(manifest.coded_nodes[i], key);
        ++coded_ok;
    }
    for (uint8_t replica : {1, 2}) {
        const auto& nodes = replica == 1 ? manifest.replica1_nodes
                                         : manifest.replica2_nodes;
        for (uint32_t j = 0; j < manifest.k; ++j) {
            const BlockKey key{object, BlockRole::source, replica, j};
            if (!store.block_exists(nodes[j], key)) continue;
            store.get_block(nodes[j], key);
            ++source_ok;
        }
    }
    out << "object " << opt.object_hex << " state "
        << to_string(manifest.state) << ": " << coded_ok << "/" << manifest.n
        << " coded blocks, " << source_ok << " source blocks verified\n";
}

void cli_store_drop_replica(const StoreOptions& opt, std::ostream& out) {
    if (opt.replica != 1 && opt.replica != 2)
        throw input_error("replica must be 1 or 2");
    FileStore store(opt.store_root);
    const ObjectId object = ObjectId::from_hex(opt.object_hex);
    const ObjectManifest manifest = store.get_manifest(object);
    if (manifest.state != ArchivalState::archived)
        throw input_error(
            "refusing to drop a replica before the object is archived");
    const auto& nodes = opt.replica == 1 ? manifest.replica1_nodes
                                         : manifest.replica2_nodes;
    uint32_t dropped = 0;
    for (uint32_t j = 0; j < manifest.k; ++j) {
        const BlockKey key{object, BlockRole::source, opt.replica, j};
        if (store.block_exists(nodes[j], key)) {
            store.delete_block(nodes[j], key);
            ++dropped;
        }
    }
    out << "dropped " << dropped << " replica-" << int(opt.replica)
        << " blocks of " << opt.object_hex << "\n";
}

}  // namespace rapidraid
