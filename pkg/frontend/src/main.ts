import { App } from "./app.js";
import { HttpClient } from "./client.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const app = new App(root, new HttpClient());
void app.bootstrap("/session/events");
