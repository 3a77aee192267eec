#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "avr/kbtool.hpp"
#include "avr/remote_embedder.hpp"

int main(int argc, char** argv) {
  CLI::App app{"AVR knowledge-base tool: build and inspect prototype KBs"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build", "Embed labeled examples into a KB file");
  std::string manifest_path, kind_str = "difficulty", out_path;
  build->add_option("--examples", manifest_path, "Manifest json of labeled examples")->required();
  build->add_option("--kind", kind_str, "difficulty | safety");
  build->add_option("--out", out_path, "Output KB json path")->required();

  auto* inspect = app.add_subcommand("inspect", "Rank KB entries against a query");
  std::string kb_path, query_text, query_image;
  int top_k = 5;
  inspect->add_option("--kb", kb_path, "KB json file")->required();
  inspect->add_option("--query", query_text, "Text query");
  inspect->add_option("--image", query_image, "PPM image query");
  inspect->add_option("--k", top_k, "How many entries to show");

  CLI11_PARSE(app, argc, argv);

  try {
    avr::StubEmbedder embedder;
    if (build->parsed()) {
      const avr::KbKind kind =
          kind_str == "safety" ? avr::KbKind::safety : avr::KbKind::difficulty;
      auto examples = avr::load_examples(manifest_path);
      avr::KnowledgeBase kb = avr::build_kb(examples, embedder, kind);
      if (kind == avr::KbKind::difficulty) {
        if (auto spread = avr::prototype_spread(kb); spread && *spread < 0.4) {
          std::cerr << "warning: hard-prototype similarity spread " << *spread
                    << " is narrow; queries may never leave the medium band\n";
        }
      }
      avr::save_kb(kb, out_path);
      std::cout << "wrote " << kb.entries.size() << " entries to " << out_path << "\n";
    } else if (inspect->parsed()) {
      avr::KnowledgeBase kb = avr::load_kb(kb_path);
      avr::Embedding query = [&] {
        if (!query_image.empty()) {
          std::ifstream in(query_image, std::ios::binary);
          if (!in) avr::fail(avr::Errc::unreadable_payload, "cannot open " + query_image);
          std::string bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
          avr::Image img = avr::Image::from_ppm(bytes);
          return embedder.embed_image(avr::extract_crop(img, img.width / 2, img.height / 2));
        }
        if (query_text.empty())
          avr::fail(avr::Errc::bad_request, "inspect needs --query or --image");
        return embedder.embed_text(query_text);
      }();
      auto ranked = avr::inspect_kb(kb, query, static_cast<std::size_t>(top_k));
      for (const auto& r : ranked) {
        std::cout << std::fixed << std::setprecision(4) << r.similarity << "  " << r.label;
        if (!r.modality.empty()) std::cout << "/" << r.modality;
        if (!r.note.empty()) std::cout << "  " << r.note;
        std::cout << "\n";
      }
    }
  } catch (const avr::Error& e) {
    std::cerr << "avr-kb: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "avr-kb: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
