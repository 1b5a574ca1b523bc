#include <httplib.h>

#include "archint/control.hpp"
#include "archint/error.hpp"
#include "archint/interchange.hpp"
#include "archint/text.hpp"

namespace archint {

using nlohmann::json;

std::string_view to_string(JobStatus s) {
    switch (s) {
        case JobStatus::queued: return "queued";
        case JobStatus::running: return "running";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "queued";
}

json Job::to_json() const {
    json j{{"id", id}, {"dataset_id", dataset_id}, {"kind", kind}, {"status", to_string(status)}};
    if (status == JobStatus::done) j["result"] = result;
    if (status == JobStatus::failed) j["error"] = error;
    return j;
}

JobRunner::~JobRunner() {
    for (auto& t : threads_)
        if (t.joinable()) t.join();
}

std::string JobRunner::submit(const std::string& dataset_id, const std::string& kind, std::function<json()> work) {
    std::lock_guard lock(mutex_);
    if (auto it = active_.find(dataset_id); it != active_.end())
        throw Error("job-conflict", "dataset '" + dataset_id + "' already has an active job",
                    {{"job_id", it->second}});
    std::string id = "job-" + std::to_string(next_id_++);
    jobs_[id] = Job{id, dataset_id, kind, JobStatus::queued, nullptr, nullptr};
    active_[dataset_id] = id;
    threads_.emplace_back([this, id, dataset_id, work = std::move(work)] {
        {
            std::lock_guard l(mutex_);
            jobs_[id].status = JobStatus::running;
        }
        json result, error;
        bool ok = true;
        try {
            result = work();
        } catch (const Error& e) {
            ok = false;
            error = e.to_json();
        } catch (const std::exception& e) {
            ok = false;
            error = Error("internal-error", e.what()).to_json();
        }
        std::lock_guard l(mutex_);
        Job& job = jobs_[id];
        job.status = ok ? JobStatus::done : JobStatus::failed;
        job.result = std::move(result);
        job.error = std::move(error);
        active_.erase(dataset_id);
        changed_.notify_all();
    });
    return id;
}

std::optional<Job> JobRunner::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

Job JobRunner::wait(const std::string& id) const {
    std::unique_lock lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error("not-found", "no job '" + id + "'");
    changed_.wait(lock, [&] {
        return it->second.status == JobStatus::done || it->second.status == JobStatus::failed;
    });
    return it->second;
}

namespace {

json fileset_summary(const FileSet& set) {
    json errors = json::array();
    for (const auto& e : set.errors) errors.push_back({{"uri", e.uri}, {"message", e.message}});
    std::size_t deleted = 0;
    for (const auto& item : set.items) deleted += item.deleted ? 1 : 0;
    return {{"items", set.items.size()}, {"deleted", deleted}, {"errors", errors}, {"digest", set.digest()}};
}

json trace_json(const std::vector<StageTrace>& trace) {
    json out = json::array();
    for (const auto& t : trace) out.push_back(to_json(t));
    return out;
}

json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error("invalid-argument", std::string("request body is not JSON: ") + e.what());
    }
}

std::string actor_of(const httplib::Request& req, const json& body, const char* member) {
    if (req.has_header("X-Actor")) return req.get_header_value("X-Actor");
    if (body.is_object() && body.contains(member) && body[member].is_string()) return body[member].get<std::string>();
    return {};
}

IngestOptions ingest_options(const json& body, IngestOptions base) {
    base.dry_run = body.value("dry_run", base.dry_run);
    base.allow_deletions = body.value("allow_deletions", base.allow_deletions);
    base.lenient = body.value("lenient", base.lenient);
    base.continue_on_error = body.value("continue_on_error", base.continue_on_error);
    return base;
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2), "application/json");
}

}  // namespace

struct Service::Impl {
    httplib::Server server;
    std::thread thread;
};

Service::Service(Workbench& workbench) : workbench_(workbench), impl_(std::make_unique<Impl>()) {
    auto& s = impl_->server;
    Workbench& wb = workbench_;
    JobRunner& jobs = jobs_;

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            reply(res, http_status_for(e.code()), {{"error", e.to_json()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", Error("internal-error", e.what()).to_json()}});
        }
    });

    s.Get("/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

    s.Post("/entities", [&wb](const httplib::Request& req, httplib::Response& res) {
        json body = body_json(req);
        SpaceName space = SpaceName::staging;
        if (req.has_param("space")) {
            auto parsed = parse_space_name(req.get_param_value("space"));
            if (!parsed) throw Error("invalid-argument", "unknown space '" + req.get_param_value("space") + "'");
            space = *parsed;
        }
        import_entities(wb.store(), body, space);
        reply(res, 200, {{"imported", true}});
    });

    s.Get("/datasets", [&wb](const httplib::Request&, httplib::Response& res) {
        json out = json::array();
        for (const auto& d : wb.list()) out.push_back(d.to_json());
        reply(res, 200, out);
    });

    s.Post("/datasets", [&wb](const httplib::Request& req, httplib::Response& res) {
        json body = body_json(req);
        reply(res, 201, wb.create_dataset(body, {}, actor_of(req, body, "actor").empty() ? "api" : actor_of(req, body, "actor")).to_json());
    });

    s.Get(R"(/datasets/([^/]+))", [&wb](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, wb.get(req.matches[1]).to_json());
    });

    s.Put(R"(/datasets/([^/]+))", [&wb](const httplib::Request& req, httplib::Response& res) {
        json body = body_json(req);
        std::string actor = actor_of(req, body, "actor");
        reply(res, 200, wb.update_dataset(req.matches[1], body, {}, actor.empty() ? "api" : actor).to_json());
    });

    s.Post(R"(/datasets/([^/]+)/(fetch|transform|ingest|cleanup))",
           [&wb, &jobs](const httplib::Request& req, httplib::Response& res) {
               std::string id = req.matches[1];
               std::string kind = req.matches[2];
               json body = body_json(req);
               std::string actor = actor_of(req, body, "actor");
               if (actor.empty()) actor = "api";
               Dataset d = wb.get(id);
               std::function<json()> work;
               if (kind == "fetch") {
                   work = [&wb, id, actor] { return fileset_summary(wb.fetch(id, actor)); };
               } else if (kind == "transform") {
                   work = [&wb, id, actor] {
                       PipelineResult r = wb.transform(id, actor);
                       return json{{"records", r.records.size()}, {"trace", trace_json(r.trace)}};
                   };
               } else if (kind == "ingest") {
                   // Precondition failures are reported synchronously.
                   if (d.status != DatasetStatus::transformed)
                       throw Error("precondition-violation",
                                   "dataset '" + id + "' is " + std::string(to_string(d.status)) +
                                       ": ingest needs status transformed",
                                   {{"status", to_string(d.status)}});
                   IngestOptions opts = ingest_options(body, d.ingest_options);
                   work = [&wb, id, actor, opts] { return to_json(wb.ingest(id, opts, actor)); };
               } else {
                   IngestOptions opts = ingest_options(body, d.ingest_options);
                   work = [&wb, id, actor, opts] { return to_json(wb.cleanup(id, opts, actor)); };
               }
               std::string job = jobs.submit(id, kind, std::move(work));
               res.set_header("Location", "/jobs/" + job);
               reply(res, 202, {{"job_id", job}, {"status", "queued"}});
           });

    s.Post(R"(/datasets/([^/]+)/preview)", [&wb](const httplib::Request& req, httplib::Response& res) {
        std::size_t limit = 1;
        if (req.has_param("limit")) {
            try {
                limit = std::stoul(req.get_param_value("limit"));
            } catch (const std::exception&) {
                throw Error("invalid-argument", "limit must be a non-negative integer");
            }
        }
        json body = body_json(req);
        std::optional<std::string> mapping;
        if (body.contains("mapping")) mapping = body["mapping"].get<std::string>();
        PreviewResult p = wb.preview(req.matches[1], limit, mapping);
        reply(res, 200,
              {{"records", json::parse(canonical_records(p.records))}, {"ead", p.ead}, {"trace", trace_json(p.trace)}});
    });

    s.Get(R"(/jobs/([^/]+))", [&jobs](const httplib::Request& req, httplib::Response& res) {
        auto job = jobs.get(req.matches[1]);
        if (!job) throw Error("not-found", "no job '" + std::string(req.matches[1]) + "'");
        reply(res, 200, job->to_json());
    });

    s.Post(R"(/datasets/([^/]+)/approve)", [&wb](const httplib::Request& req, httplib::Response& res) {
        json body = body_json(req);
        std::string approver = actor_of(req, body, "approver");
        if (approver.empty()) throw Error("invalid-argument", "approval needs an X-Actor header or an approver");
        reply(res, 200, wb.approve(req.matches[1], approver).to_json());
    });

    s.Post(R"(/datasets/([^/]+)/promote)", [&wb](const httplib::Request& req, httplib::Response& res) {
        json body = body_json(req);
        std::string actor = actor_of(req, body, "actor");
        reply(res, 200, to_json(wb.promote(req.matches[1], actor.empty() ? "api" : actor)));
    });

    s.Get(R"(/datasets/([^/]+)/diff)", [&wb](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, wb.diff(req.matches[1]));
    });

    // The global id is one URL component: encoded slashes and percent signs
    // are decoded once from the raw request target.
    s.Get(R"(/spaces/([^/]+)/units/(.+))", [&wb](const httplib::Request& req, httplib::Response& res) {
        auto space = parse_space_name(std::string(req.matches[1]));
        if (!space) throw Error("not-found", "no space '" + std::string(req.matches[1]) + "'");
        std::string target = req.target.substr(0, req.target.find('?'));
        std::string prefix = "/spaces/" + std::string(req.matches[1]) + "/units/";
        std::string global_id = httplib::detail::decode_url(target.substr(prefix.size()), false);
        std::optional<std::size_t> depth;
        if (req.has_param("depth")) depth = std::stoul(req.get_param_value("depth"));
        auto snapshot = wb.store().snapshot(*space);
        if (!snapshot->find_unit(global_id)) throw Error("not-found", "no unit '" + global_id + "'");
        reply(res, 200, to_json(get_subtree(*snapshot, global_id, depth)));
    });
}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
    auto& s = impl_->server;
    int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("io-error", "cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([&s] { s.listen_after_bind(); });
    s.wait_until_ready();
    return bound;
}

void Service::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) throw Error("io-error", "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace archint
