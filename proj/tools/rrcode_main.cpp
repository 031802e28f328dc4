#include <CLI11.hpp>

#include <iostream>

#include "rapidraid/cli_commands.hpp"

using namespace rapidraid;

int main(int argc, char** argv) {
    CLI::App app{"rapidraid: pipelined and classical erasure coding toolkit"};
    app.require_subcommand(1);

    EncodeOptions enc;
    std::string enc_engine = "rapidraid";
    auto* encode = app.add_subcommand("encode", "stage a file and encode it");
    encode->add_option("--file", enc.file, "input file")->required();
    encode->add_option("--store", enc.store_root, "store root directory")
        ->required();
    encode->add_option("--n", enc.n, "codeword length");
    encode->add_option("--k", enc.k, "source block count");
    encode->add_option("--field", enc.word_bits, "word size: 8 or 16")
        ->check(CLI::IsMember({8, 16}));
    encode->add_option("--engine", enc_engine, "classical or rapidraid")
        ->check(CLI::IsMember({"classical", "rapidraid"}));
    encode->add_option("--chunk-size", enc.chunk_size, "stream chunk bytes");
    encode->add_option("--seed", enc.seed, "deterministic seed");
    encode->add_flag("--colocate", enc.colocate,
                     "classical coordinator runs on source node 1");
    encode->add_option("--transport", enc.transport, "sim or socket")
        ->check(CLI::IsMember({"sim", "socket"}));

    DecodeOptions dec;
    auto* decode = app.add_subcommand("decode", "reconstruct an object");
    decode->add_option("--store", dec.store_root, "store root directory")
        ->required();
    decode->add_option("--object", dec.object_hex, "object id (hex)")
        ->required();
    decode->add_option("--out", dec.output, "output file")->required();
    decode->add_option("--blocks", dec.blocks,
                       "codeword block indices to use (1-based)");
    decode->add_option("--chunk-size", dec.chunk_size, "stream chunk bytes");

    AnalyzeOptions ana;
    std::string ana_csv;
    auto* analyze = app.add_subcommand("analyze", "k-subset dependency census");
    analyze->add_option("--n", ana.n, "codeword length")->required();
    analyze->add_option("--k", ana.k, "source block count")->required();
    analyze->add_option("--trials", ana.trials, "random assignments per subset");
    analyze->add_option("--seed", ana.seed, "census seed");
    analyze->add_option("--out", ana_csv, "CSV output path");

    SearchOptions sea;
    std::string sea_out;
    auto* search =
        app.add_subcommand("search-coeffs", "search accident-free coefficients");
    search->add_option("--n", sea.n, "codeword length")->required();
    search->add_option("--k", sea.k, "source block count")->required();
    search->add_option("--field", sea.word_bits, "word size: 2, 4, 8 or 16")
        ->check(CLI::IsMember({2, 4, 8, 16}));
    search->add_option("--budget", sea.budget, "max attempts");
    search->add_option("--trials", sea.trials, "census assignments");
    search->add_option("--seed", sea.seed, "search seed");
    search->add_option("--out", sea_out, "write found code spec here");

    ResilienceOptions res;
    auto* resilience =
        app.add_subcommand("resilience", "static resilience in number of 9s");
    resilience
        ->add_option("--scheme", res.scheme, "3replica, classical or rapidraid")
        ->check(CLI::IsMember({"3replica", "classical", "rapidraid"}));
    resilience->add_option("--n", res.n, "codeword length");
    resilience->add_option("--k", res.k, "source block count");
    resilience->add_option("--p", res.probabilities, "node failure probabilities");
    resilience->add_option("--trials", res.trials, "census assignments");
    resilience->add_option("--seed", res.seed, "census seed");

    ConjectureOptions con;
    auto* conjecture =
        app.add_subcommand("verify-conjecture", "MDS frontier census");
    conjecture->add_option("--n-max", con.n_max, "largest n to test")
        ->required();
    conjecture->add_option("--trials", con.trials, "census assignments");
    conjecture->add_option("--seed", con.seed, "census seed");

    BenchOptions ben;
    std::string ben_sweep;
    auto* bench = app.add_subcommand("bench", "run a benchmark scenario");
    bench->add_option("--scenario", ben.scenario_file, "scenario key=value file")
        ->required();
    bench->add_option("--out", ben.csv_out, "CSV output path");
    bench->add_option("--engine", ben.engine, "classical, rapidraid or both")
        ->check(CLI::IsMember({"classical", "rapidraid", "both"}));
    bench->add_option("--sweep-congested", ben_sweep,
                      "sweep congested-node counts 0..N");

    StoreOptions sto;
    auto* store = app.add_subcommand("store", "store administration");
    store->require_subcommand(1);
    auto* store_verify = store->add_subcommand("verify", "checksum an object");
    store_verify->add_option("--store", sto.store_root, "store root")->required();
    store_verify->add_option("--object", sto.object_hex, "object id (hex)")
        ->required();
    auto* store_drop =
        store->add_subcommand("drop-replica", "delete a retained replica");
    store_drop->add_option("--store", sto.store_root, "store root")->required();
    store_drop->add_option("--object", sto.object_hex, "object id (hex)")
        ->required();
    store_drop->add_option("--replica", sto.replica, "replica number (1 or 2)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*encode) {
            enc.engine = engine_from_string(enc_engine);
            cli_encode(enc, std::cout);
        } else if (*decode) {
            cli_decode(dec, std::cout);
        } else if (*analyze) {
            if (!ana_csv.empty()) ana.csv_out = ana_csv;
            cli_analyze(ana, std::cout);
        } else if (*search) {
            if (!sea_out.empty()) sea.spec_out = sea_out;
            if (!cli_search_coeffs(sea, std::cout)) return 3;
        } else if (*resilience) {
            cli_resilience(res, std::cout);
        } else if (*conjecture) {
            cli_verify_conjecture(con, std::cout);
        } else if (*bench) {
            if (!ben_sweep.empty())
                ben.sweep_max = static_cast<uint32_t>(std::stoul(ben_sweep));
            cli_bench(ben, std::cout);
        } else if (*store) {
            if (*store_verify) cli_store_verify(sto, std::cout);
            if (*store_drop) cli_store_drop_replica(sto, std::cout);
        }
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const not_found_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
