// Minimal page companion: registers the page, binds manifest elements,
// streams pointer events and chat lines, and shows replies.
(function () {
  "use strict";
  var params = new URLSearchParams((document.currentScript && document.currentScript.src.split("?")[1]) || "");
  var wsUrl = params.get("ws") || "ws://" + location.hostname + ":8787/ws";
  var bound = new Map();
  var lastHover = new Map();
  var socket;

  function resolvePath(path) {
    var el = document.documentElement;
    if (path === "") return el;
    var parts = path.split("/");
    for (var i = 0; i < parts.length && el; i++) el = el.children[Number(parts[i])];
    return el || null;
  }

  function send(msg) {
    if (socket && socket.readyState === 1) socket.send(JSON.stringify(msg));
  }

  function pointer(entry, el, kind) {
    var now = Date.now();
    if (kind === "hover" && now - (lastHover.get(entry.uuid) || 0) < 150) return;
    lastHover.set(entry.uuid, now);
    var msg = { type: "pointer", ts: now, uuid: entry.uuid, role: entry.role, table_id: entry.table_id, kind: kind };
    if (entry.row_index != null) msg.row_index = entry.row_index;
    if (entry.col_index != null) msg.col_index = entry.col_index;
    if (entry.role === "cell") msg.value_text = el.textContent.replace(/\s+/g, " ").trim();
    send(msg);
  }

  function bind(entry) {
    var el = resolvePath(entry.selector);
    if (!el || bound.has(entry.uuid)) return;
    el.setAttribute("data-tt-uuid", entry.uuid);
    var onOver = function () { pointer(entry, el, "hover"); };
    var onClick = function () { pointer(entry, el, "click"); };
    el.addEventListener("mouseover", onOver, { passive: true });
    el.addEventListener("click", onClick, { passive: true });
    bound.set(entry.uuid, { el: el, off: function () {
      el.removeEventListener("mouseover", onOver);
      el.removeEventListener("click", onClick);
      el.removeAttribute("data-tt-uuid");
    } });
  }

  function unbind(entry) {
    var b = bound.get(entry.uuid);
    if (b) { b.off(); bound.delete(entry.uuid); }
  }

  var host = document.createElement("div");
  host.style.cssText = "position:fixed;right:12px;bottom:12px;z-index:2147483647";
  var root = host.attachShadow({ mode: "open" });
  root.innerHTML = '<div style="width:320px;font:13px sans-serif;background:#fff;border:1px solid #999;padding:6px">' +
    '<div id="log" style="max-height:200px;overflow:auto"></div>' +
    '<input id="say" placeholder="Say something..." style="width:100%"></div>';
  var log = root.getElementById("log");
  function line(text) {
    var d = document.createElement("div");
    d.textContent = text;
    log.appendChild(d);
    log.scrollTop = log.scrollHeight;
  }
  root.getElementById("say").addEventListener("keydown", function (e) {
    if (e.key !== "Enter" || !e.target.value) return;
    line("> " + e.target.value);
    send({ type: "utterance", text: e.target.value, ts: Date.now() });
    e.target.value = "";
  });

  function applyPatch(patch) {
    patch.forEach(function (p) {
      var row = document.querySelector('[data-tt-row="' + p.row_index + '"]');
      if (row) { row.style.display = p.visible ? "" : "none"; row.style.order = p.order; }
    });
  }

  function connect() {
    socket = new WebSocket(wsUrl);
    socket.onopen = function () {
      bound.forEach(function (_, uuid) { unbind({ uuid: uuid }); });
      send({ type: "register", url: location.href, html: document.documentElement.outerHTML });
    };
    socket.onmessage = function (ev) {
      var msg = JSON.parse(ev.data);
      if (msg.type === "manifest") msg.entries.forEach(bind);
      if (msg.type === "manifest_diff") { msg.remove.forEach(unbind); msg.add.forEach(bind); }
      if (msg.type === "manifest" || msg.type === "manifest_diff") {
        (msg.entries || msg.add).forEach(function (e) {
          if (e.role === "row") { var b = bound.get(e.uuid); if (b) b.el.setAttribute("data-tt-row", e.row_index); }
        });
      }
      if (msg.type === "clarification") line("? " + msg.prompt);
      if (msg.type === "response") {
        line("< " + msg.speech);
        if (msg.patch) applyPatch(msg.patch);
        if (msg.page_html) { var w = window.open("", "_blank"); if (w) { w.document.write(msg.page_html); w.document.close(); } }
      }
    };
    socket.onclose = function () { setTimeout(connect, 2000); };
  }

  var timer = null;
  new MutationObserver(function (records) {
    if (records.every(function (r) { return host.contains(r.target) || r.target === host; })) return;
    clearTimeout(timer);
    timer = setTimeout(function () {
      send({ type: "mutation", html: document.documentElement.outerHTML });
    }, 250);
  }).observe(document.body, { childList: true, subtree: true, characterData: true });

  document.body.appendChild(host);
  connect();
})();
