#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pathgen/error.hpp"
#include "pathgen/toydata.hpp"

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pathgen::Error("cannot write " + path);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regenerate the bundled toy knowledge graph and QA dataset"};
    std::string out_dir = "data";
    pathgen::ToyDataConfig cfg;
    app.add_option("--out-dir", out_dir, "Directory receiving the dataset files");
    app.add_option("--seed", cfg.seed, "Generation seed");
    app.add_option("--entities-per-type", cfg.entities_per_type);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        pathgen::ToyDataFiles files = pathgen::make_toy_data(cfg);
        write_file(out_dir + "/toy_kg.tsv", files.kg_tsv);
        write_file(out_dir + "/toy_qa_train.jsonl", files.qa_train_jsonl);
        write_file(out_dir + "/toy_qa_dev.jsonl", files.qa_dev_jsonl);
        write_file(out_dir + "/toy_qa_test.jsonl", files.qa_test_jsonl);
        write_file(out_dir + "/toy_start_entities.txt", files.start_entities);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
