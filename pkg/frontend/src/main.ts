import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app root element");

// Served by the exploration service itself (same origin), so the API
// lives at the origin root.
const app = new App(root, new ApiClient(""));
void app.start();
