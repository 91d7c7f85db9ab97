// Copyright 2026 The qxplain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "qx/common.h"
#include "qx/registry.h"
#include "qx/service.h"

namespace qx {
namespace {

namespace fs = std::filesystem;

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ServiceConfig cfg;
    cfg.data_root = fs::temp_directory_path() / "qx_test_service";
    fs::remove_all(cfg.data_root);
    service = new Service(cfg);
    service->LoadDefaults();
  }
  static void TearDownTestSuite() { delete service; }
  static Service* service;
};
Service* ServiceTest::service = nullptr;

TEST_F(ServiceTest, Health) {
  auto r = service->Handle("GET", "/v1/health", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.json()["status"], "ok");
}

TEST_F(ServiceTest, UnbalancedInterpretationIs422) {
  auto r = service->Handle("POST", "/v1/interpretations:parse",
                           R"({"text": "Predict(Diabetes, Age = 45"})");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.json()["code"], "UnusableParse");
}

TEST_F(ServiceTest, ContextualAskIs200WithWarning) {
  auto r = service->Handle("POST", "/v1/ask",
                           R"({"question": "What is the context behind a Glucose of 150?"})");
  ASSERT_EQ(r.status, 200);
  auto j = r.json();
  EXPECT_TRUE(j["tuple"].is_null());
  EXPECT_EQ(j["status"], "unsupported");
  EXPECT_NE(j["warnings"][0].get<std::string>().find("no explainer is registered"),
            std::string::npos);
}

TEST_F(ServiceTest, AskThenDereferenceRun) {
  auto r = service->Handle(
      "POST", "/v1/ask",
      R"({"question": "How did the model justify predicting Diabetes for a 45-year-old female with a BMI of 27 and a Diabetes Pedigree Function of 0.2?"})");
  ASSERT_EQ(r.status, 200) << r.body;
  auto j = r.json();
  EXPECT_EQ(j["rq"]["explanation_type"], "rationale");
  std::string id = j["run_id"];
  auto run = service->Handle("GET", "/v1/runs/" + id, "");
  ASSERT_EQ(run.status, 200);
  EXPECT_EQ(run.json()["artifacts"][0]["files"].size(), 4u);
  auto replay = service->Handle("POST", "/v1/runs/" + id + "/replay", "");
  ASSERT_EQ(replay.status, 200);
  EXPECT_TRUE(replay.json()["identical"].get<bool>());
}

TEST_F(ServiceTest, DatasetAndModelLifecycle) {
  std::string csv = ReadFile(DefaultDataDir() / "pima.csv");
  nlohmann::json body = {{"csv", csv}};
  auto d = service->Handle("POST", "/v1/datasets", body.dump());
  ASSERT_EQ(d.status, 200) << d.body;
  EXPECT_EQ(d.json()["dataset_id"], service->default_dataset());  // content hash
  auto m = service->Handle("POST", "/v1/models",
                           nlohmann::json{{"dataset_id", service->default_dataset()},
                                          {"kind", "dt"}}.dump());
  ASSERT_EQ(m.status, 200) << m.body;
  EXPECT_TRUE(m.json()["report"].contains("f1"));

  auto bad = service->Handle("POST", "/v1/datasets",
                             nlohmann::json{{"csv", "Glucose,Outcome\n1,0\n"}}.dump());
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.json()["code"], "SchemaMismatch");

  std::string one_class = "Pregnancies,Glucose,BloodPressure,SkinThickness,Insulin,BMI,"
                          "DiabetesPedigreeFunction,Age,Outcome\n";
  for (int i = 0; i < 20; ++i) one_class += "1," + std::to_string(90 + i) + ",70,20,80,30,0.5,30,1\n";
  auto ds = service->Handle("POST", "/v1/datasets", nlohmann::json{{"csv", one_class}}.dump());
  ASSERT_EQ(ds.status, 200) << ds.body;
  auto single = service->Handle(
      "POST", "/v1/models",
      nlohmann::json{{"dataset_id", ds.json()["dataset_id"]}, {"kind", "lr"}}.dump());
  EXPECT_EQ(single.status, 409);
}

TEST_F(ServiceTest, NotFoundAndBadJson) {
  EXPECT_EQ(service->Handle("GET", "/v1/runs/nope", "").status, 404);
  EXPECT_EQ(service->Handle("GET", "/v1/nothing", "").status, 404);
  EXPECT_EQ(service->Handle("POST", "/v1/ask", "{not json").status, 400);
}

TEST(ServiceAuthTest, StaticToken) {
  ServiceConfig cfg;
  cfg.data_root = fs::temp_directory_path() / "qx_test_service_auth";
  cfg.api_token = "s3cret";
  Service s(cfg);
  EXPECT_EQ(s.Handle("GET", "/v1/registry", "").status, 401);
  EXPECT_EQ(s.Handle("GET", "/v1/registry", "", {{"Authorization", "Bearer s3cret"}}).status, 200);
  EXPECT_EQ(s.Handle("GET", "/v1/health", "").status, 200);
}

}  // namespace
}  // namespace qx
