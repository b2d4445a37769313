var handlers = {};
handlers["run"] = function (data) {
  log("run: start");
  var started = now();
  count = count + 1;
  log("run: counted");
  var limit = 10;
  check(limit);
  log("run: checked");
  let foo = handlers[data.id];
  log("run: resolved");
  var elapsed = now() - started;
  record(elapsed);
  log("run: timed");
  flush();
  foo(data);
  log("run: done");
};
var commHandler = function (event) {
  var data = JSON.parse(event.data);
  handlers["run"](data);
};
