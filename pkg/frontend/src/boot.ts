import { Client } from "./api.js";
import { createApp } from "./app.js";
import { APP_TEMPLATE } from "./template.js";

const root = document.getElementById("app");
if (root) {
  root.innerHTML = APP_TEMPLATE;
  // served by the review service itself, so the API lives on the same origin
  const app = createApp(document, new Client(""));
  void app.loadCorpora();
}
