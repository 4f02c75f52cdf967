// synergy: command-line driver for view generation, population, benchmarks,
// workload runs and consistency checks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "synergy/bench.hpp"
#include "synergy/database.hpp"
#include "synergy/errors.hpp"
#include "synergy/fixtures.hpp"
#include "synergy/runner.hpp"

namespace fs = std::filesystem;
using namespace synergy;

namespace {

struct Inputs {
    std::string schema = "company";
    std::string workload;
    std::string roots;
    std::size_t scale = 500;
    std::size_t ratio = 10;
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    std::size_t repeats = 10;
    std::string out;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path data_dir() {
    const char* env = std::getenv("SYNERGY_DATA_DIR");
    return env && *env ? fs::path(env) : fs::path("synergy-data");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        auto b = item.find_first_not_of(' ');
        auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

// Schema JSON and workload text from a builtin name or files; --roots
// replaces the schema's roots.
std::pair<std::string, std::string> definition(const Inputs& in) {
    std::string schema_json;
    std::string workload_text;
    if (fs::exists(in.schema)) {
        schema_json = read_text(in.schema);
    } else if (auto f = fixtures::builtin(in.schema)) {
        schema_json = f->schema_json;
        workload_text = f->workload_text;
    } else {
        throw std::runtime_error("no schema file or builtin fixture named '" + in.schema + "'");
    }
    if (!in.workload.empty()) workload_text = read_text(in.workload);
    if (!in.roots.empty()) {
        auto doc = nlohmann::json::parse(schema_json);
        doc["roots"] = split_list(in.roots);
        schema_json = doc.dump(2) + "\n";
    }
    return {schema_json, workload_text};
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << text;
}

int cmd_gen_views(const Inputs& in) {
    auto [schema_json, workload_text] = definition(in);
    Design design = build_design(parse_schema_json(schema_json), sql::parse_workload(workload_text));
    if (in.out.empty()) {
        std::cout << render_report(design);
        return 0;
    }
    fs::create_directories(in.out);
    emit(render_report(design), (fs::path(in.out) / "report.txt").string());
    emit(render_view_ddl(design), (fs::path(in.out) / "views.sql").string());
    emit(render_rewritten_workload(design), (fs::path(in.out) / "rewritten.sql").string());
    emit(render_indexes(design), (fs::path(in.out) / "indexes.txt").string());
    std::cout << "wrote report.txt, views.sql, rewritten.sql, indexes.txt to " << in.out << "\n";
    return 0;
}

int cmd_populate(const Inputs& in) {
    if (!fixtures::builtin(in.schema)) throw std::runtime_error("populate needs a builtin fixture: company, company-project, tpcw-micro");
    auto [schema_json, workload_text] = definition(in);
    fs::path dir = data_dir();
    DatabaseOptions options;
    options.durable = false;
    auto db = Database::create(dir, schema_json, workload_text, options);
    auto counts = fixtures::populate(in.schema, db->txn(), {in.scale, in.ratio, in.seed});
    db->meta()["fixture"] = in.schema;
    db->meta()["scale"] = in.scale;
    db->meta()["ratio"] = in.ratio;
    db->meta()["seed"] = in.seed;
    db->checkpoint();
    for (const auto& [rel, n] : counts) std::cout << rel << "," << n << "\n";
    std::cout << "populated " << dir.string() << "\n";
    return 0;
}

int cmd_bench_join(const Inputs& in, const std::string& queries) {
    std::string fixture = in.schema == "company" ? "tpcw-micro" : in.schema;
    auto f = fixtures::builtin(fixture);
    if (!f) throw std::runtime_error("bench-join needs a builtin fixture");
    DatabaseOptions options;
    options.durable = false;
    auto db = Database::in_memory(f->schema(), f->workload(), options);
    fixtures::populate(fixture, db->txn(), {in.scale, in.ratio, in.seed});

    std::vector<std::size_t> picked;
    if (queries.empty()) {
        for (std::size_t i = 0; i < db->design().input.size(); ++i) {
            if (!db->design().input[i].is_write()) picked.push_back(i);
        }
    } else {
        for (const auto& q : split_list(queries)) picked.push_back(std::stoul(q.substr(q[0] == 'Q' ? 1 : 0)) - 1);
    }
    std::string csv = bench::join_csv_header() + "\n";
    for (std::size_t q : picked) {
        for (auto mode : {bench::JoinMode::Join, bench::JoinMode::View}) {
            bench::JoinBenchOptions o;
            o.repeats = in.repeats;
            o.seed = in.seed;
            o.scale = in.scale;
            auto row = bench::bench_join(*db, q, mode, o);
            std::cerr << row.query << " " << bench::mode_name(mode) << ": " << row.plan << "\n";
            csv += bench::join_csv_row(row) + "\n";
        }
    }
    emit(csv, in.out);
    return 0;
}

int cmd_bench_locks(const Inputs& in, const std::string& counts_text) {
    std::vector<std::size_t> counts;
    for (const auto& c : split_list(counts_text)) counts.push_back(std::stoul(c));
    std::string csv = bench::lock_csv_header() + "\n";
    for (const auto& row : bench::bench_locks(counts, in.repeats)) csv += bench::lock_csv_row(row) + "\n";
    emit(csv, in.out);
    return 0;
}

int cmd_verify(const Inputs& in) {
    auto db = Database::open(data_dir());
    if (db->redone() || db->recovered()) {
        std::cerr << "re-applied " << db->redone() << " committed and recovered " << db->recovered()
                  << " unfinished statements\n";
    }
    VerifyReport report = db->verify();
    emit(report.render(), in.out);
    return report.ok() ? 0 : 1;
}

int cmd_run(const Inputs& in, std::size_t statements, bool fsync) {
    DatabaseOptions options;
    options.fsync = fsync;
    auto db = Database::open(data_dir(), options);
    std::vector<sql::Statement> workload =
        in.workload.empty() ? db->design().input : sql::load_workload_file(in.workload);
    runner::RunOptions o;
    o.threads = in.threads;
    o.statements = statements;
    o.seed = in.seed;
    auto report = runner::run_workload(*db, workload, o);
    db->checkpoint();
    emit(report.csv(), in.out);
    for (const auto& s : report.per_statement) {
        if (s.errors) std::cerr << s.errors << " errors in: " << s.sql << "\n  first: " << s.first_error << "\n";
    }
    return report.errors() ? 1 : 0;
}

int cmd_sql(const std::string& text, const std::vector<std::string>& params) {
    auto db = Database::open(data_dir());
    std::vector<Value> values;
    for (const auto& p : params) {
        char* end = nullptr;
        long long v = std::strtoll(p.c_str(), &end, 10);
        if (!p.empty() && end && *end == '\0') {
            values.emplace_back(static_cast<std::int64_t>(v));
        } else {
            values.emplace_back(p);
        }
    }
    auto result = db->execute(text, values);
    if (auto* rs = std::get_if<engine::ResultSet>(&result)) {
        for (std::size_t i = 0; i < rs->columns.size(); ++i) std::cout << (i ? "," : "") << rs->columns[i];
        std::cout << "\n";
        for (const auto& row : rs->rows) {
            for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? "," : "") << display(row[i]);
            std::cout << "\n";
        }
    } else {
        const auto& t = std::get<txn::TxnResult>(result);
        std::cout << "txn " << t.txn_id << ": locks=" << t.locks_acquired << " base=" << t.base_rows
                  << " views=" << t.view_rows << " indexes=" << t.index_rows << (t.no_op ? " no-op" : "") << "\n";
        db->checkpoint();
    }
    return 0;
}

// Splits a benchmark CSV into gnuplot data blocks, one per series, separated
// by two blank lines so `index N` selects a series.
int cmd_gnuplot(const std::string& input, const std::string& out) {
    std::istringstream lines(read_text(input));
    std::string header;
    std::getline(lines, header);
    auto cols = split_list(header);
    std::map<std::string, std::vector<std::string>> series;
    std::vector<std::string> order;
    for (std::string line; std::getline(lines, line);) {
        auto f = split_list(line);
        if (f.size() != cols.size()) continue;
        std::string name;
        std::string point;
        if (cols.size() == 5 && cols[1] == "query") {
            name = f[1] + "-" + f[2];
            point = f[0] + " " + f[3] + " " + f[4];
        } else if (cols.size() == 3 && cols[0] == "count") {
            name = "locks";
            point = f[0] + " " + f[1] + " " + f[2];
        } else {
            throw std::runtime_error("unrecognised CSV header: " + header);
        }
        if (!series.count(name)) order.push_back(name);
        series[name].push_back(point);
    }
    std::string text;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i) text += "\n\n";
        text += "# " + order[i] + "\n# x mean_ms stderr_ms\n";
        for (const auto& p : series[order[i]]) text += p + "\n";
    }
    emit(text, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synergy: materialized views and hierarchical locking over an ordered key-value store"};
    app.require_subcommand(1);
    Inputs in;

    auto add_schema = [&](CLI::App* c) {
        c->add_option("--schema", in.schema, "schema JSON file or builtin fixture (company, company-project, tpcw-micro)");
        c->add_option("--workload", in.workload, "workload file, one statement per line");
        c->add_option("--roots", in.roots, "comma-separated root relations, overriding the schema");
    };
    auto add_scale = [&](CLI::App* c) {
        c->add_option("--scale", in.scale, "number of root rows (customers or addresses)");
        c->add_option("--ratio", in.ratio, "children per parent row");
        c->add_option("--seed", in.seed, "random seed");
    };

    auto* gen = app.add_subcommand("gen-views", "generate candidate views, select views, rewrite the workload");
    add_schema(gen);
    gen->add_option("--out", in.out, "output directory (report to stdout when absent)");

    auto* pop = app.add_subcommand("populate", "create a database in $SYNERGY_DATA_DIR and load a fixture");
    add_schema(pop);
    add_scale(pop);

    std::string queries;
    auto* bj = app.add_subcommand("bench-join", "time join queries over base tables and over views");
    bj->add_option("--schema", in.schema, "builtin fixture (default tpcw-micro)");
    add_scale(bj);
    bj->add_option("--repeats", in.repeats, "samples per query and mode");
    bj->add_option("--query", queries, "comma-separated queries, e.g. Q1,Q2 (default: all)");
    bj->add_option("--out", in.out, "CSV file (stdout when absent)");

    std::string counts = "10,100,1000";
    auto* bl = app.add_subcommand("bench-locks", "time acquire and release of uncontended locks");
    bl->add_option("--counts", counts, "comma-separated lock counts");
    bl->add_option("--repeats", in.repeats, "runs per count");
    bl->add_option("--out", in.out, "CSV file (stdout when absent)");

    auto* ver = app.add_subcommand("verify", "recompute views and indexes and diff them against the store");
    ver->add_option("--out", in.out, "report file (stdout when absent)");

    std::size_t statements = 1000;
    bool no_fsync = false;
    auto* run = app.add_subcommand("run", "execute a workload with concurrent clients");
    run->add_option("--workload", in.workload, "workload file (default: the database's workload)");
    run->add_option("--threads", in.threads, "client threads");
    run->add_option("--repeats", statements, "total statements to execute");
    run->add_option("--seed", in.seed, "random seed for parameters");
    run->add_flag("--no-fsync", no_fsync, "skip fsync on log appends");
    run->add_option("--out", in.out, "CSV file (stdout when absent)");

    std::string gp_in;
    auto* gp = app.add_subcommand("gnuplot", "turn a benchmark CSV into gnuplot data blocks");
    gp->add_option("csv", gp_in, "benchmark CSV")->required();
    gp->add_option("--out", in.out, "data file (stdout when absent)");

    std::string sql_text;
    std::vector<std::string> sql_params;
    auto* sq = app.add_subcommand("sql", "execute one statement against the database");
    sq->add_option("statement", sql_text, "SQL statement")->required();
    sq->add_option("params", sql_params, "placeholder values");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_gen_views(in);
        if (*pop) return cmd_populate(in);
        if (*bj) return cmd_bench_join(in, queries);
        if (*bl) return cmd_bench_locks(in, counts);
        if (*ver) return cmd_verify(in);
        if (*run) return cmd_run(in, statements, !no_fsync);
        if (*gp) return cmd_gnuplot(gp_in, in.out);
        if (*sq) return cmd_sql(sql_text, sql_params);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
