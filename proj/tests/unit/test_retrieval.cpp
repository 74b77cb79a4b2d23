#include <gtest/gtest.h>

#include <random>

#include "scenedex/error.hpp"
#include "scenedex/retrieval.hpp"

using namespace scenedex;

namespace {

Seconds S(double s) { return Seconds::from_double(s); }

std::set<std::string> ids(const RetrievalSelection& s) { return {s.scene_ids.begin(), s.scene_ids.end()}; }

Entity ent(const std::string& name, std::set<std::string> scenes) {
    return Entity{name, "CONCEPT", {name + " desc"}, {}, 0, std::move(scenes), {Modality::Asr}};
}

// Scenes v:0001..v:0003 plus a silent v:0004; entity X is shared by the first two.
struct Toy {
    StoreBundle stores;
    KnowledgeGraph graph;

    Toy() {
        SceneSet set{"v", {}, S(80)};
        set.scenes.push_back({"v:0001", S(0), S(20), "about a and x", SceneKind::Speech});
        set.scenes.push_back({"v:0002", S(20), S(40), "about x and b", SceneKind::Speech});
        set.scenes.push_back({"v:0003", S(40), S(60), "about c and d", SceneKind::Speech});
        Scene quiet = make_silent(S(60), S(80));
        quiet.id = "v:0004";
        set.scenes.push_back(quiet);
        stores.videos.push_back(set);
        SceneKnowledge sk;
        sk.entities.emplace("A", ent("A", {"v:0001"}));
        sk.entities.emplace("X", ent("X", {"v:0001", "v:0002"}));
        sk.entities.emplace("B", ent("B", {"v:0002"}));
        sk.entities.emplace("C", ent("C", {"v:0003"}));
        sk.entities.emplace("D", ent("D", {"v:0003"}));
        for (auto [a, b] : {std::pair{"A", "X"}, {"X", "B"}, {"B", "C"}, {"C", "D"}})
            sk.relations.emplace(edge_key(a, b), Relation{a, b, {std::string(a) + b}, {}, {"v:0001"}});
        graph.merge(sk);
    }

    RetrievalSelection select(std::vector<std::string> scene_ids) const {
        RetrievalSelection sel;
        sel.scene_ids = std::move(scene_ids);
        for (const auto& id : sel.scene_ids) {
            sel.scores[id] = 0.5;
            sel.tokens[id] = 10;
        }
        return sel;
    }
};

std::vector<std::string> relation_names(const ContextSection& s) {
    std::vector<std::string> out;
    for (const auto& r : s.relations) out.push_back(r.src_name + r.dst_name);
    return out;
}

std::vector<std::string> entity_names(const ContextSection& s) {
    std::vector<std::string> out;
    for (const auto& e : s.entities) out.push_back(e.name);
    return out;
}

}  // namespace

TEST(Keywords, ScriptedDedupAndFallback) {
    const RetrievalConfig cfg;
    ScriptedProvider llm([](const ProviderRequest&) { return ProviderResponse::text(R"(["prompt caching","Cost","cost"])"); });
    bool degraded = true;
    EXPECT_EQ(extract_query_keywords("q?", llm, cfg, &degraded), (std::vector<std::string>{"prompt caching", "cost"}));
    EXPECT_FALSE(degraded);

    ScriptedProvider down(std::vector<ScriptedProvider::Step>{ScriptedProvider::transport_failure()});
    EXPECT_EQ(extract_query_keywords("how does prompt caching compare", down, cfg, &degraded),
              (std::vector<std::string>{"prompt", "caching", "compare"}));
    EXPECT_TRUE(degraded);

    ScriptedProvider nested([](const ProviderRequest&) {
        return ProviderResponse::text(R"({"high_level_keywords":["Pricing"],"low_level_keywords":["tokens","pricing"]})");
    });
    EXPECT_EQ(extract_query_keywords("q", nested, cfg), (std::vector<std::string>{"pricing", "tokens"}));
    EXPECT_THROW(extract_query_keywords("  ", nested, cfg), Error);
}

TEST(SelectScenes, SpecExamples) {
    const std::map<std::string, double> scores{{"a", .9}, {"b", .8}, {"c", .7}};
    EXPECT_EQ(ids(select_scenes(scores, {{"a", 1000}, {"b", 1000}, {"c", 1000}}, 2400)), (std::set<std::string>{"a", "b"}));
    const auto sel = select_scenes(scores, {{"a", 2000}, {"b", 900}, {"c", 300}}, 2400);
    EXPECT_EQ(ids(sel), (std::set<std::string>{"a", "c"}));
    EXPECT_EQ(sel.total_tokens, 2300u);
    EXPECT_TRUE(select_scenes(scores, {{"a", 101}, {"b", 200}, {"c", 300}}, 100).scene_ids.empty());
    EXPECT_THROW(select_scenes(scores, {{"a", 1}, {"b", 1}, {"c", 1}}, 0), Error);
}

TEST(SelectScenes, TiesPreferEarlierPositionAndOutputIsCorpusOrder) {
    std::vector<SceneCandidate> c{{"z", 0.5, 600, 0}, {"a", 0.5, 600, 3}, {"m", 0.9, 600, 2}};
    const auto sel = select_scenes(c, 1200);
    EXPECT_EQ(sel.scene_ids, (std::vector<std::string>{"z", "m"}));
    const auto neg = select_scenes(std::vector<SceneCandidate>{{"p", 0.1, 10, 0}, {"n", -0.2, 10, 1}, {"o", 0.0, 10, 2}}, 100);
    EXPECT_EQ(neg.scene_ids, std::vector<std::string>{"p"});
}

TEST(SelectScenes, FeasibleAndCloseToOptimum) {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SceneCandidate> c;
        for (int i = 0; i < 10; ++i)
            c.push_back({"s" + std::to_string(i), std::uniform_real_distribution<double>(0.01, 1)(rng),
                         std::uniform_int_distribution<std::size_t>(50, 1500)(rng), static_cast<std::size_t>(i)});
        const std::size_t budget = 2400;
        const auto sel = select_scenes(c, budget);
        std::size_t used = 0;
        for (const auto& id : sel.scene_ids) used += sel.tokens.at(id);
        ASSERT_LE(used, budget);
        ASSERT_EQ(used, sel.total_tokens);
    }
}

TEST(FocusedCaption, ScriptedFallbackAndCache) {
    const Scene s{"v:0001", S(0), S(20), "talk", SceneKind::Speech};
    ScriptedProvider vlm([](const ProviderRequest& r) {
        EXPECT_NE(r.messages[0].content.find("caching, cost"), std::string::npos);
        return ProviderResponse::text("Focused view.");
    });
    KvStore kv;
    CachedProvider cached(vlm, kv);
    const RetrievalConfig cfg;
    EXPECT_EQ(focused_caption(s, {"caching", "cost"}, {}, "generic", cached, cfg).text, "Focused view.");
    EXPECT_EQ(focused_caption(s, {"caching", "cost"}, {}, "generic", cached, cfg).text, "Focused view.");
    EXPECT_EQ(vlm.calls(), 1u);

    ScriptedProvider down(std::vector<ScriptedProvider::Step>{ScriptedProvider::transport_failure()});
    const auto fb = focused_caption(s, {"caching"}, {}, "generic", down, cfg);
    EXPECT_EQ(fb.text, "generic");
    EXPECT_TRUE(fb.degraded);
}

TEST(AssembleContext, SharedEntityAndRelationSetSemantics) {
    const Toy toy;
    const auto ctx = assemble_context(toy.select({"v:0001", "v:0002"}), toy.graph, toy.stores, {}, 1);
    ASSERT_EQ(ctx.sections.size(), 2u);
    EXPECT_EQ(entity_names(ctx.sections[0]), (std::vector<std::string>{"A", "X"}));
    EXPECT_EQ(entity_names(ctx.sections[1]), (std::vector<std::string>{"B", "X"}));
    EXPECT_EQ(relation_names(ctx.sections[0]), (std::vector<std::string>{"AX", "XB"}));
    EXPECT_EQ(relation_names(ctx.sections[1]), (std::vector<std::string>{"BC"}));

    const auto strict = assemble_context(toy.select({"v:0001", "v:0002"}), toy.graph, toy.stores, {}, 0);
    EXPECT_EQ(relation_names(strict.sections[0]), (std::vector<std::string>{"AX", "XB"}));
    EXPECT_TRUE(strict.sections[1].relations.empty());

    // Each relation appears at most once in the rendering.
    EXPECT_EQ(ctx.rendered.find("- X -- B"), ctx.rendered.rfind("- X -- B"));
}

TEST(AssembleContext, SilentEmptyAndMissing) {
    const Toy toy;
    const auto silent = assemble_context(toy.select({"v:0004"}), toy.graph, toy.stores, {{"v:0004", "a dark room"}}, 1);
    ASSERT_EQ(silent.sections.size(), 1u);
    EXPECT_EQ(silent.sections[0].transcript, kSilentMarker);
    EXPECT_EQ(silent.sections[0].caption, "a dark room");
    EXPECT_TRUE(silent.sections[0].entities.empty());

    const auto empty = assemble_context(toy.select({}), toy.graph, toy.stores, {}, 1);
    EXPECT_TRUE(empty.sections.empty());
    EXPECT_NE(empty.rendered.find(kNoScenesSentinel), std::string::npos);

    EXPECT_THROW(assemble_context(toy.select({"v:0099"}), toy.graph, toy.stores, {}, 1), Error);
}

TEST(GenerateAnswer, ProvenanceSentinelAndCache) {
    const Toy toy;
    const auto sel = toy.select({"v:0002"});
    const auto ctx = assemble_context(sel, toy.graph, toy.stores, {}, 1);
    ScriptedProvider llm([](const ProviderRequest& r) {
        return ProviderResponse::text("context length " + std::to_string(r.messages[0].content.size()));
    });
    KvStore kv;
    CachedProvider cached(llm, kv);
    const Query q{"what is x?", {}, 2400};
    const Answer a = generate_answer(q, ctx, sel, cached, RetrievalConfig{});
    EXPECT_EQ(a.scene_ids, std::vector<std::string>{"v:0002"});
    EXPECT_EQ(generate_answer(q, ctx, sel, cached, RetrievalConfig{}).text, a.text);
    EXPECT_EQ(llm.calls(), 1u);

    ScriptedProvider echo([](const ProviderRequest& r) {
        EXPECT_NE(r.messages[0].content.find(kNoScenesSentinel), std::string::npos);
        return ProviderResponse::text("nothing found");
    });
    const auto none = assemble_context(toy.select({}), toy.graph, toy.stores, {}, 1);
    EXPECT_EQ(generate_answer(q, none, toy.select({}), echo, RetrievalConfig{}).text, "nothing found");
}
