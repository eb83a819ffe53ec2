import { ApiClient } from "./api.js";
import { App } from "./app.js";

// The page is served statically, so the service origin rides in as a query
// parameter; the default matches dgw serve on the same machine.
const base =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8088";

const root = document.getElementById("app");
if (root) {
  void new App(root, new ApiClient(base), localStorage).start();
}
