// strukt: criteria-first structural extraction toolkit, command-line front end.
//
// Exit codes: 0 success, 1 validation/conformance failure, 2 usage error,
// 3 I/O error, 4 internal error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "strukt/bench.hpp"
#include "strukt/canonical.hpp"
#include "strukt/criterion.hpp"
#include "strukt/dobject.hpp"
#include "strukt/errors.hpp"
#include "strukt/extract.hpp"
#include "strukt/field.hpp"
#include "strukt/perturb.hpp"
#include "strukt/products.hpp"
#include "strukt/semantics.hpp"
#include "strukt/validate.hpp"
#include "strukt/version.hpp"

namespace {

namespace fs = std::filesystem;
using strukt::json;

std::string g_command_line;

void emit(bool as_json, const json& payload, const std::string& human) {
    if (as_json) std::cout << strukt::canonical_dump(payload) << "\n";
    else std::cout << human;
}

int cmd_field_import_pgm(const std::string& in, const std::string& out, bool as_json) {
    const strukt::MeasurementField f = strukt::import_pgm(in);
    strukt::save_field(f, out);
    emit(as_json, json{{"field_hash", f.field_hash}, {"file", out}},
         "imported " + std::to_string(f.height) + "x" + std::to_string(f.width) + " field, hash " +
             f.field_hash + "\n");
    return 0;
}

int cmd_field_synth(std::uint32_t side, std::uint32_t blobs, double contrast, double texture,
                    std::uint64_t seed, const std::string& out, const std::string& truth_out,
                    bool as_json) {
    strukt::SceneSpec spec;
    spec.side = side;
    spec.n_blobs = blobs;
    spec.contrast = contrast;
    spec.texture_sigma = texture;
    spec.seed = seed;
    const strukt::SyntheticScene scene = strukt::make_synthetic(spec);
    strukt::save_field(scene.field, out);
    if (!truth_out.empty()) strukt::save_partition(scene.truth, truth_out);
    emit(as_json, json{{"field_hash", scene.field.field_hash}, {"file", out}},
         "synthetic scene written, hash " + scene.field.field_hash + "\n");
    return 0;
}

int cmd_extract(const std::string& field_path, const std::string& criterion_path,
                const std::string& out_dir, std::optional<std::int64_t> level, bool as_json) {
    const strukt::MeasurementField field = strukt::load_field(field_path);
    const strukt::CriterionSpec cspec = strukt::load_criterion_file(criterion_path);
    const strukt::ExtractionResult result = strukt::extract(field, cspec);
    const std::string prod_hash = strukt::product_hash(result.product);

    const strukt::WrittenProduct written = strukt::write_product(result.product, out_dir, "product");
    json sidecar;
    sidecar["criterion_digest"] = result.criterion_digest;
    sidecar["field_hash"] = field.field_hash;
    sidecar["implementation_id"] = result.implementation_id;
    sidecar["objective"] = result.objective ? json(*result.objective) : json(nullptr);
    sidecar["product"] = {{"type", strukt::product_type_name(result.product)},
                          {"product_hash", prod_hash},
                          {"file", written.main_file.filename().string()}};
    if (level) {
        const auto* h = std::get_if<strukt::Hierarchy>(&result.product);
        if (!h) strukt::fail_usage("--level applies only to hierarchy-producing criteria");
        const strukt::Partition& p = strukt::coarsen(*h, static_cast<std::size_t>(*level));
        strukt::save_partition(p, fs::path(out_dir) / "level.sprt");
        sidecar["level"] = {{"index", *level}, {"product_hash", strukt::product_hash(p)}};
    }
    strukt::write_file_bytes(fs::path(out_dir) / "extraction.json", strukt::canonical_dump(sidecar));

    emit(as_json, sidecar,
         "product " + prod_hash + " (" + strukt::product_type_name(result.product) + ") -> " +
             written.main_file.string() + "\n");
    return 0;
}

int cmd_validate(const std::string& field_path, const std::string& criterion_path,
                 const std::string& perturbation_path, std::int64_t replicates,
                 std::uint32_t boundary_tol, const std::string& out_dir, bool as_json) {
    if (replicates < 1) strukt::fail_usage("--replicates must be >= 1");
    const strukt::MeasurementField field = strukt::load_field(field_path);
    const strukt::CriterionSpec cspec = strukt::load_criterion_file(criterion_path);
    const strukt::PerturbationSpec pspec = strukt::load_perturbation_file(perturbation_path);
    const strukt::StabilityEnvelope env = strukt::stability_envelope(
        field, cspec, pspec, static_cast<std::uint32_t>(replicates), boundary_tol);
    const json j = strukt::envelope_to_json(env);
    strukt::write_file_bytes(fs::path(out_dir) / "envelope.json", strukt::canonical_dump(j));
    strukt::write_file_bytes(fs::path(out_dir) / "envelope.csv", strukt::envelope_to_csv(env));
    emit(as_json, j,
         "envelope over " + std::to_string(env.n_replicates) + " replicates: mean ARI " +
             strukt::format_double(env.ari.mean) + ", mean VI " + strukt::format_double(env.vi.mean) +
             ", mean boundary-F " + strukt::format_double(env.boundary_f.mean) + "\n");
    return 0;
}

int cmd_map(const std::string& product_path, const std::string& field_path,
            const std::string& mapping_path, const std::string& ontology_path,
            const std::string& out_path, bool as_json) {
    const strukt::Partition p = strukt::load_partition(product_path);
    const strukt::MeasurementField field = strukt::load_field(field_path);
    const strukt::SemanticMapping mapping =
        strukt::mapping_from_json(strukt::parse_json_file(mapping_path));
    const strukt::Ontology ontology =
        strukt::ontology_from_json(strukt::parse_json_file(ontology_path));
    const strukt::LabeledProduct lp = strukt::apply_mapping(field, p, mapping, ontology);
    const json j = strukt::labeled_product_to_json(lp);
    strukt::write_file_bytes(out_path, strukt::canonical_dump(j));
    emit(as_json, j, "labeled product -> " + out_path + " (product " + lp.product_hash + ")\n");
    return 0;
}

int cmd_crosswalk(const std::string& labeled_path, const std::string& crosswalk_path,
                  const std::string& out_path, bool as_json) {
    const strukt::LabeledProduct lp =
        strukt::labeled_product_from_json(strukt::parse_json_file(labeled_path));
    const strukt::Crosswalk cw = strukt::crosswalk_from_json(strukt::parse_json_file(crosswalk_path));
    const strukt::LabeledProduct out = strukt::apply_crosswalk(lp, cw);
    const json j = strukt::labeled_product_to_json(out);
    strukt::write_file_bytes(out_path, strukt::canonical_dump(j));
    emit(as_json, j, "crosswalked product -> " + out_path + "\n");
    return 0;
}

int cmd_do_export(const std::string& field_path, const std::string& criterion_path,
                  const std::string& out_dir, const std::vector<std::string>& perturbation_paths,
                  const std::vector<std::uint32_t>& scale_factors,
                  const std::vector<std::string>& parents, std::int64_t version,
                  const std::string& envelope_path, bool as_json) {
    const strukt::MeasurementField field = strukt::load_field(field_path);
    const strukt::CriterionSpec cspec = strukt::load_criterion_file(criterion_path);
    const strukt::ExtractionResult result = strukt::extract(field, cspec);

    strukt::DoInputs inputs;
    inputs.command_line = g_command_line;
    inputs.parents = parents;
    inputs.version = version;
    for (const auto& p : perturbation_paths)
        inputs.perturbation_digests.push_back(
            strukt::perturbation_hash(strukt::load_perturbation_file(p)));
    inputs.scale_factors = scale_factors;

    std::optional<strukt::StabilityEnvelope> envelope;
    if (!envelope_path.empty())
        envelope = strukt::envelope_from_json(strukt::parse_json_file(envelope_path));

    const std::string do_id = strukt::export_do(field, cspec, result, inputs, envelope, out_dir);
    emit(as_json, json{{"do_id", do_id}}, "do_id " + do_id + "\n");
    return 0;
}

int cmd_do_verify(const std::string& do_path, bool as_json) {
    const strukt::ConformanceReport report = strukt::verify_do(do_path);
    emit(as_json, json{{"checks", report.to_json()}, {"conformant", report.ok()}}, report.to_text());
    return report.ok() ? 0 : 1;
}

int cmd_bench_fig2(std::uint64_t seed, const std::string& out_dir, bool as_json) {
    const strukt::Fig2Report report = strukt::run_fig2(seed, out_dir);
    std::string human;
    for (const auto& c : report.columns)
        human += c.name + ": structural ARI " + strukt::format_double(c.structural_ari) +
                 ", baseline agreement " + strukt::format_double(c.baseline_agreement) + "\n";
    emit(as_json, strukt::fig2_report_to_json(report), human);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    for (int i = 0; i < argc; ++i) {
        if (i) g_command_line += " ";
        g_command_line += argv[i];
    }

    CLI::App app{"strukt: criteria-first structural extraction toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", strukt::implementation_id());
    bool as_json = false;
    app.add_flag("--json", as_json, "machine-readable JSON on stdout");

    // field
    auto* field_cmd = app.add_subcommand("field", "field container utilities");
    field_cmd->require_subcommand(1);
    auto* import_cmd = field_cmd->add_subcommand("import-pgm", "import a PGM image");
    std::string import_in, import_out;
    import_cmd->add_option("--in", import_in, "PGM file")->required();
    import_cmd->add_option("--out", import_out, "output field file")->required();
    auto* synth_cmd = field_cmd->add_subcommand("synth", "generate a synthetic scene");
    std::uint32_t synth_side = 128, synth_blobs = 3;
    double synth_contrast = 0.5, synth_texture = 0.05;
    std::uint64_t synth_seed = 0;
    std::string synth_out, synth_truth;
    synth_cmd->add_option("--side", synth_side, "grid side");
    synth_cmd->add_option("--blobs", synth_blobs, "number of blobs");
    synth_cmd->add_option("--contrast", synth_contrast, "blob/background contrast");
    synth_cmd->add_option("--texture", synth_texture, "texture noise sigma");
    synth_cmd->add_option("--seed", synth_seed, "scene seed");
    synth_cmd->add_option("--out", synth_out, "output field file")->required();
    synth_cmd->add_option("--truth", synth_truth, "also write the generator truth partition");

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "run S_C on a field");
    std::string ex_field, ex_criterion, ex_out;
    std::int64_t ex_level = -1;
    extract_cmd->add_option("--field", ex_field, "field file")->required();
    extract_cmd->add_option("--criterion", ex_criterion, "criterion JSON file")->required();
    extract_cmd->add_option("--out", ex_out, "output directory")->required();
    extract_cmd->add_option("--level", ex_level, "hierarchy level to export as a partition");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "stability envelope under a perturbation");
    std::string va_field, va_criterion, va_perturbation, va_out;
    std::int64_t va_replicates = 0;
    std::uint32_t va_tol = 1;
    validate_cmd->add_option("--field", va_field)->required();
    validate_cmd->add_option("--criterion", va_criterion)->required();
    validate_cmd->add_option("--perturbation", va_perturbation)->required();
    validate_cmd->add_option("--replicates", va_replicates)->required();
    validate_cmd->add_option("--boundary-tol", va_tol, "boundary match tolerance in pixels");
    validate_cmd->add_option("--out", va_out)->required();

    // map
    auto* map_cmd = app.add_subcommand("map", "apply a semantic mapping to a partition");
    std::string mp_product, mp_field, mp_mapping, mp_ontology, mp_out;
    map_cmd->add_option("--product", mp_product)->required();
    map_cmd->add_option("--field", mp_field)->required();
    map_cmd->add_option("--mapping", mp_mapping)->required();
    map_cmd->add_option("--ontology", mp_ontology)->required();
    map_cmd->add_option("--out", mp_out)->required();

    // crosswalk
    auto* cw_cmd = app.add_subcommand("crosswalk", "translate a labeled product between ontologies");
    std::string cw_labeled, cw_file, cw_out;
    cw_cmd->add_option("--labeled", cw_labeled)->required();
    cw_cmd->add_option("--crosswalk", cw_file)->required();
    cw_cmd->add_option("--out", cw_out)->required();

    // do
    auto* do_cmd = app.add_subcommand("do", "digital object export and verification");
    do_cmd->require_subcommand(1);
    auto* do_export = do_cmd->add_subcommand("export", "extract and export a digital object");
    std::string de_field, de_criterion, de_out, de_envelope;
    std::vector<std::string> de_perturbations, de_parents;
    std::vector<std::uint32_t> de_factors;
    std::int64_t de_version = 1;
    do_export->add_option("--field", de_field)->required();
    do_export->add_option("--criterion", de_criterion)->required();
    do_export->add_option("--out", de_out)->required();
    do_export->add_option("--perturbation", de_perturbations,
                          "declared perturbation spec file (repeatable)");
    do_export->add_option("--scale-factors", de_factors, "declared scale envelope factors");
    do_export->add_option("--parent", de_parents, "parent do_id (repeatable)");
    do_export->add_option("--do-version", de_version, "lineage version");
    do_export->add_option("--envelope", de_envelope, "stability envelope JSON to embed");
    auto* do_verify = do_cmd->add_subcommand("verify", "conformance-check a digital object");
    std::string dv_path;
    do_verify->add_option("--do", dv_path, "digital object JSON file")->required();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "benchmark experiments");
    bench_cmd->require_subcommand(1);
    auto* fig2_cmd = bench_cmd->add_subcommand("fig2", "comparative stability experiment");
    std::uint64_t f2_seed = 42;
    std::string f2_out;
    fig2_cmd->add_option("--seed", f2_seed);
    fig2_cmd->add_option("--out", f2_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (import_cmd->parsed()) return cmd_field_import_pgm(import_in, import_out, as_json);
        if (synth_cmd->parsed())
            return cmd_field_synth(synth_side, synth_blobs, synth_contrast, synth_texture, synth_seed,
                                   synth_out, synth_truth, as_json);
        if (extract_cmd->parsed())
            return cmd_extract(ex_field, ex_criterion, ex_out,
                               ex_level >= 0 ? std::optional<std::int64_t>(ex_level) : std::nullopt,
                               as_json);
        if (validate_cmd->parsed())
            return cmd_validate(va_field, va_criterion, va_perturbation, va_replicates, va_tol, va_out,
                                as_json);
        if (map_cmd->parsed())
            return cmd_map(mp_product, mp_field, mp_mapping, mp_ontology, mp_out, as_json);
        if (cw_cmd->parsed()) return cmd_crosswalk(cw_labeled, cw_file, cw_out, as_json);
        if (do_export->parsed())
            return cmd_do_export(de_field, de_criterion, de_out, de_perturbations, de_factors,
                                 de_parents, de_version, de_envelope, as_json);
        if (do_verify->parsed()) return cmd_do_verify(dv_path, as_json);
        if (fig2_cmd->parsed()) return cmd_bench_fig2(f2_seed, f2_out, as_json);
        std::cerr << "no command selected\n";
        return 2;
    } catch (const strukt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
