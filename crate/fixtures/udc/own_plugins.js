var plugins = {};
plugins["audit"] = function (info) {
  log("audit: begin");
  var stamp = now();
  audit(stamp);
  log("audit: stamped");
  var depth = 3;
  limit(depth);
  log("audit: limited");
  let hook = plugins[info.name];
  log("audit: found");
  var took = now() - stamp;
  track(took);
  log("audit: tracked");
  flush();
  if (plugins.hasOwnProperty(info.name)) {
    hook(info);
  }
  log("audit: end");
};
var onPlugin = function (event) {
  var info = JSON.parse(event.data);
  plugins["audit"](info);
};
