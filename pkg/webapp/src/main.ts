import { createApiClient } from "./api.js";
import { bootstrap } from "./app.js";

window.addEventListener("DOMContentLoaded", () => {
  void bootstrap(document, createApiClient(""));
});
