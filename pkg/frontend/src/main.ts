import { mountApp } from "./app.js";

const baseUrl = new URLSearchParams(window.location.search).get("api") ?? "";
mountApp(document, baseUrl);
